//! Evaluation metrics. All are pure functions of state sequences so they can
//! be recomputed from dumped CSV files.

use crate::game::ObservationSet;
use crate::linalg::Vector;

/// Metric (a): L2 distance between the measurements and the selected
/// coordinates of `predicted` at the observed stages.
pub fn metric_a(observations: &ObservationSet, predicted: &[Vector]) -> f64 {
    observations
        .iter()
        .map(|(t, y)| (y - observations.model.observe(&predicted[t])).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Metric (b): L2 distance between two stacked state sequences.
pub fn metric_b(predicted: &[Vector], truth: &[Vector]) -> f64 {
    predicted.iter().zip(truth).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt()
}

/// Metric (c): mean over samples of the L2 distance between trajectories
/// under inferred and true costs. Zero for no samples.
pub fn metric_c(inferred: &[Vec<Vector>], truth: &[Vec<Vector>]) -> f64 {
    if inferred.is_empty() {
        return 0.0;
    }
    inferred.iter().zip(truth).map(|(a, b)| metric_b(a, b)).sum::<f64>() / inferred.len() as f64
}

fn stacked_norm(states: &[Vector]) -> f64 {
    states.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// The three metrics plus normalized companions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `a` divided by the square root of the number of observed scalars.
    pub a_rms: f64,
    /// `b` divided by the norm of the true trajectory.
    pub b_relative: f64,
    /// Mean of per-sample distances divided by the true trajectory norms.
    pub c_relative: f64,
}

impl Metrics {
    pub const NAN: Metrics = Metrics { a: f64::NAN, b: f64::NAN, c: f64::NAN, a_rms: f64::NAN, b_relative: f64::NAN, c_relative: f64::NAN };

    pub fn compute(
        observations: &ObservationSet,
        predicted: &[Vector],
        truth: &[Vector],
        generalization_inferred: &[Vec<Vector>],
        generalization_truth: &[Vec<Vector>],
    ) -> Metrics {
        let a = metric_a(observations, predicted);
        let b = metric_b(predicted, truth);
        let c = metric_c(generalization_inferred, generalization_truth);
        let scalars = observations.len() * observations.model.selection.len();
        let c_relative = if generalization_inferred.is_empty() {
            0.0
        } else {
            generalization_inferred
                .iter()
                .zip(generalization_truth)
                .map(|(x, y)| ratio(metric_b(x, y), stacked_norm(y)))
                .sum::<f64>()
                / generalization_inferred.len() as f64
        };
        Metrics { a, b, c, a_rms: ratio(a, (scalars as f64).sqrt()), b_relative: ratio(b, stacked_norm(truth)), c_relative }
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c].iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ObservationModel;

    fn states(vals: &[[f64; 2]]) -> Vec<Vector> {
        vals.iter().map(|v| Vector::from_row_slice(v)).collect()
    }

    #[test]
    fn hand_computed_values() {
        let truth = states(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let pred = states(&[[0.0, 0.0], [1.0, 3.0], [2.0, 4.0]]);
        assert_eq!(metric_b(&pred, &truth), 5.0);
        let obs = ObservationSet {
            model: ObservationModel::new(vec![1], vec![1, 2], 0.1),
            measurements: vec![Vector::from_element(1, 0.0), Vector::from_element(1, 0.0)],
        };
        assert_eq!(metric_a(&obs, &pred), 5.0);
        let m = Metrics::compute(&obs, &pred, &truth, &[pred.clone(), truth.clone()], &[truth.clone(), truth.clone()]);
        assert_eq!(m.c, 2.5);
        assert!((m.b_relative - 5.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((m.a_rms - 5.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_parameters_give_zero_generalization_gap() {
        let truth = states(&[[0.3, -1.0], [0.2, 0.5]]);
        assert_eq!(metric_c(&[truth.clone(), truth.clone()], &[truth.clone(), truth]), 0.0);
        assert_eq!(metric_c(&[], &[]), 0.0);
    }
}
