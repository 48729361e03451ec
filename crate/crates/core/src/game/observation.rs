use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{GameError, Result};
use crate::game::Trajectory;
use crate::linalg::Vector;

/// Coordinate-selection sensor with isotropic Gaussian noise, observed at a
/// subset of stages.
///
/// `times` are zero-based state indices (stage `t` in the usual one-based
/// notation is `t - 1` here).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub selection: Vec<usize>,
    pub times: Vec<usize>,
    pub sigma: f64,
}

impl ObservationModel {
    pub fn new(selection: Vec<usize>, times: Vec<usize>, sigma: f64) -> Self {
        Self { selection, times, sigma }
    }

    /// Every coordinate at every stage.
    pub fn full(n: usize, horizon: usize, sigma: f64) -> Self {
        Self::new((0..n).collect(), (0..horizon).collect(), sigma)
    }

    /// All stages except the zero-based, inclusive `gap` window.
    pub fn times_with_gap(horizon: usize, gap: std::ops::RangeInclusive<usize>) -> Vec<usize> {
        (0..horizon).filter(|t| !gap.contains(t)).collect()
    }

    pub fn validate(&self, n: usize, horizon: usize) -> Result<()> {
        if self.selection.iter().any(|&k| k >= n) {
            return Err(GameError::Shape(format!("selection index out of range for n = {n}")));
        }
        if self.selection.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GameError::Shape("selection indices must be strictly increasing".into()));
        }
        if self.times.is_empty() {
            return Err(GameError::Shape("at least one observed stage is required".into()));
        }
        if self.times.iter().any(|&t| t >= horizon) || self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GameError::Shape(format!("observed stages must be increasing and below {horizon}")));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(GameError::Domain(format!("noise level must be finite and non-negative, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `h(x)`: the selected coordinates.
    pub fn observe(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.selection.len(), self.selection.iter().map(|&k| x[k]))
    }
}

/// Measurements `y_t = h(x_t) + noise` at the observed stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub model: ObservationModel,
    pub measurements: Vec<Vector>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn selection(&self) -> &[usize] {
        &self.model.selection
    }

    pub fn times(&self) -> &[usize] {
        &self.model.times
    }

    /// `(t, y_t)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Vector)> {
        self.model.times.iter().copied().zip(&self.measurements)
    }
}

/// Sample noisy observations of `traj`; deterministic in `seed`.
pub fn apply_observation(traj: &Trajectory, model: &ObservationModel, seed: u64) -> Result<ObservationSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    apply_observation_with(traj, model, &mut rng)
}

/// Same as [`apply_observation`] but drawing from a caller-supplied stream.
pub fn apply_observation_with<R: Rng>(traj: &Trajectory, model: &ObservationModel, rng: &mut R) -> Result<ObservationSet> {
    let n = traj.states[0].len();
    model.validate(n, traj.horizon())?;
    let measurements = model
        .times
        .iter()
        .map(|&t| {
            let clean = model.observe(&traj.states[t]);
            clean.map(|v| {
                let e: f64 = rng.sample(StandardNormal);
                v + model.sigma * e
            })
        })
        .collect();
    Ok(ObservationSet { model: model.clone(), measurements })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(horizon: usize, n: usize) -> Trajectory {
        let states = (0..horizon).map(|t| Vector::from_fn(n, |k, _| (t * n + k) as f64)).collect();
        let controls = vec![Vector::zeros(1); horizon - 1];
        Trajectory::new(states, controls).unwrap()
    }

    #[test]
    fn zero_noise_observes_exact_coordinates() {
        let traj = ramp(5, 4);
        let model = ObservationModel::new(vec![0, 2], vec![0, 3], 0.0);
        let obs = apply_observation(&traj, &model, 1).unwrap();
        assert_eq!(obs.measurements[1].as_slice(), &[12.0, 14.0]);
    }

    #[test]
    fn occlusion_window_leaves_31_of_40() {
        let times = ObservationModel::times_with_gap(40, 10..=18);
        assert_eq!(times.len(), 31);
        assert_eq!(times[9], 9);
        assert_eq!(times[10], 19);
    }

    #[test]
    fn same_seed_same_noise() {
        let traj = ramp(6, 3);
        let model = ObservationModel::new(vec![0, 1, 2], (0..6).collect(), 0.3);
        let a = apply_observation(&traj, &model, 42).unwrap();
        let b = apply_observation(&traj, &model, 42).unwrap();
        assert_eq!(a, b);
        let c = apply_observation(&traj, &model, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let traj = ramp(4, 2);
        for model in [
            ObservationModel::new(vec![2], vec![0], 0.0),
            ObservationModel::new(vec![1, 0], vec![0], 0.0),
            ObservationModel::new(vec![0], vec![], 0.0),
            ObservationModel::new(vec![0], vec![4], 0.0),
            ObservationModel::new(vec![0], vec![0], -1.0),
        ] {
            assert!(apply_observation(&traj, &model, 0).is_err());
        }
    }
}
