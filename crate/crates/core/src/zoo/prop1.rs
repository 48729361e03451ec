//! Scalar two-player game `x' = x + u1 + u2` over three states with stage
//! costs `1/2 (Q1 x^2 + u1^2)`, `1/2 (Q2 x^2 + 2 u2^2)` and terminal costs
//! `1/2 Qi x^2`. The state weights `(Q1, Q2)` are not identifiable from
//! equilibrium trajectories: `(1, 1)` and `(1/2, 2)` give the same ones.

use std::sync::Arc;

use crate::error::Result;
use crate::game::{AffineLQGame, GameShape, LinearDynamics, ParamCost, QuadraticCost, QuadraticForm, StageDynamics, StageTerm};
use crate::linalg::Matrix;

pub const PROP1_HORIZON: usize = 3;

fn shape() -> GameShape {
    GameShape::new(PROP1_HORIZON, vec![1, 0], vec![1, 1]).expect("valid shape")
}

fn stage_dynamics() -> StageDynamics {
    StageDynamics::linear(Matrix::identity(1, 1), Matrix::from_row_slice(1, 2, &[1.0, 1.0]))
}

fn control_weight(player: usize) -> Matrix {
    let mut r = Matrix::zeros(2, 2);
    r[(player, player)] = if player == 0 { 1.0 } else { 2.0 };
    r
}

pub fn build_prop1(q1: f64, q2: f64) -> Result<AffineLQGame> {
    let stage: Vec<QuadraticCost> = [q1, q2]
        .iter()
        .enumerate()
        .map(|(i, &q)| QuadraticCost::pure(Matrix::from_element(1, 1, q), control_weight(i)))
        .collect();
    AffineLQGame::new(shape(), vec![stage_dynamics(); PROP1_HORIZON - 1], vec![stage; PROP1_HORIZON])
}

/// `theta = (Q1, Q2)` weighting `1/2 x^2`, with the control terms fixed.
pub fn prop1_param_model() -> Result<(LinearDynamics, ParamCost)> {
    let shape = shape();
    let dynamics = LinearDynamics::time_invariant(shape.clone(), stage_dynamics());
    let half_square: Arc<dyn StageTerm> = Arc::new(QuadraticForm::state(&Matrix::identity(1, 1), 2));
    let bases = vec![vec![half_square.clone()], vec![half_square]];
    let fixed: Vec<Vec<Arc<dyn StageTerm>>> =
        (0..2).map(|i| vec![Arc::new(QuadraticForm::control(&control_weight(i), 1)) as _]).collect();
    Ok((dynamics, ParamCost::new(shape, bases, fixed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::solve_fbne_lq;

    #[test]
    fn last_stage_gains() {
        let sol = solve_fbne_lq(&build_prop1(1.0, 1.0).unwrap()).unwrap();
        let p = &sol.strategy.gains[1];
        assert!((p[(0, 0)] - 0.4).abs() < 1e-12 && (p[(1, 0)] - 0.2).abs() < 1e-12);
        let sol = solve_fbne_lq(&build_prop1(0.5, 2.0).unwrap()).unwrap();
        let p = &sol.strategy.gains[1];
        assert!((p[(0, 0)] - 0.2).abs() < 1e-12 && (p[(1, 0)] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn both_pairs_lie_on_the_manifold() {
        for (q1, q2) in [(1.0, 1.0), (0.5, 2.0)] {
            assert_eq!(2.0 * q1 + q2, 3.0);
        }
    }
}
