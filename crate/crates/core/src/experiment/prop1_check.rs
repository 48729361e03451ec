use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{GameError, Result};
use crate::linalg::Vector;
use crate::nash::{fbne_trajectory_lq, prop1_last_gains, prop1_oracle, solve_fbne_lq};
use crate::zoo::build_prop1;

/// Tolerance for trajectory agreement.
pub const PROP1_TRAJECTORY_TOL: f64 = 1e-10;
/// Tolerance for last-stage gains.
pub const PROP1_GAIN_TOL: f64 = 1e-12;

/// Outcome of [`verify_prop1`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report {
    pub samples: usize,
    /// Largest coordinate gap between the trajectories of `(1, 1)` and `(1/2, 2)`.
    pub max_pair_gap: f64,
    /// Largest gap between the general solver and the closed form.
    pub max_oracle_gap: f64,
    /// Largest deviation of the solver's last-stage gains from the closed form.
    pub max_gain_error: f64,
    /// Gap between `(1, 1)` and the manifold point `(3/4, 3/2)` at `x1 = 1`.
    pub off_pair_gap: f64,
    /// Initial states at which a check failed.
    pub failures: Vec<f64>,
}

impl Prop1Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.max_gain_error <= PROP1_GAIN_TOL
    }
}

const PAIRS: [(f64, f64); 2] = [(1.0, 1.0), (0.5, 2.0)];

/// Check the two isolated parameter pairs of the scalar game on `samples`
/// initial states drawn uniformly from `[-10, 10]`.
pub fn verify_prop1(samples: usize, seed: u64) -> Result<Prop1Report> {
    if samples == 0 {
        return Err(GameError::Domain("at least one sample is required".into()));
    }
    let games = PAIRS.iter().map(|&(a, b)| build_prop1(a, b)).collect::<Result<Vec<_>>>()?;

    let mut max_gain_error: f64 = 0.0;
    for (game, &(q1, q2)) in games.iter().zip(&PAIRS) {
        let gains = &solve_fbne_lq(game)?.strategy.gains[1];
        let expected = prop1_last_gains(q1, q2);
        for (i, e) in expected.iter().enumerate() {
            max_gain_error = max_gain_error.max((gains[(i, 0)] - e).abs());
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut max_pair_gap, mut max_oracle_gap) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for _ in 0..samples {
        let x1: f64 = rng.random_range(-10.0..=10.0);
        let start = Vector::from_element(1, x1);
        let trajs = games.iter().map(|g| fbne_trajectory_lq(g, &start)).collect::<Result<Vec<_>>>()?;
        let pair_gap = trajs[0].max_state_deviation(&trajs[1]);
        let mut oracle_gap: f64 = 0.0;
        for (traj, &(q1, q2)) in trajs.iter().zip(&PAIRS) {
            let (x2, x3) = prop1_oracle(q1, q2, x1)?;
            oracle_gap = oracle_gap.max((traj.states[1][0] - x2).abs()).max((traj.states[2][0] - x3).abs());
        }
        max_pair_gap = max_pair_gap.max(pair_gap);
        max_oracle_gap = max_oracle_gap.max(oracle_gap);
        if !(pair_gap <= PROP1_TRAJECTORY_TOL && oracle_gap <= PROP1_TRAJECTORY_TOL) {
            failures.push(x1);
        }
    }

    let one = Vector::from_element(1, 1.0);
    let off = fbne_trajectory_lq(&build_prop1(0.75, 1.5)?, &one)?;
    let off_pair_gap = fbne_trajectory_lq(&games[0], &one)?.max_state_deviation(&off);

    Ok(Prop1Report { samples, max_pair_gap, max_oracle_gap, max_gain_error, off_pair_gap, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_samples_pass() {
        let report = verify_prop1(100, 0).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.off_pair_gap > 1e-6);
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(verify_prop1(0, 0).is_err());
    }
}
