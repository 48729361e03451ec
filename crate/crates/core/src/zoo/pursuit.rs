//! Two planar single integrators: player 1 herds player 2 toward the
//! origin while player 2 chases player 1. Two variants change player 1's
//! objective: aligning player 2's coordinates, or chasing with a biased
//! estimate `2 p^2` of player 2's position.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{GameError, Result};
use crate::game::{
    AffineLQGame, GameShape, LinearDynamics, LinearForm, ParamCost, QuadraticCost, SquaredResiduals, StageDynamics,
    StageTerm, Var,
};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PursuitVariant {
    /// `g^1 = |p^2|^2 + |u^1|^2`.
    Base,
    /// `g^1 = |p^2_x - p^2_y|^2 + |u^1|^2`.
    Aligned,
    /// `g^1 = |p^1 - 2 p^2|^2 + |u^1|^2`.
    Biased,
}

impl PursuitVariant {
    pub const ALL: [PursuitVariant; 3] = [PursuitVariant::Base, PursuitVariant::Aligned, PursuitVariant::Biased];

    pub fn model_name(self) -> &'static str {
        match self {
            PursuitVariant::Base => "lq_pursuit",
            PursuitVariant::Aligned => "lq_pursuit_ghat",
            PursuitVariant::Biased => "lq_pursuit_ghhat",
        }
    }
}

impl FromStr for PursuitVariant {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.model_name() == s)
            .ok_or_else(|| GameError::UnknownModel(s.to_string()))
    }
}

fn shape(horizon: usize) -> Result<GameShape> {
    GameShape::uniform(2, horizon, 2, 2)
}

fn stage_dynamics() -> StageDynamics {
    StageDynamics::linear(Matrix::identity(4, 4), Matrix::identity(4, 4))
}

/// Rows `r` such that the state part of player `i`'s cost is `sum_r (r . x)^2`.
fn state_rows(variant: PursuitVariant, player: usize) -> Vec<LinearForm> {
    let s = Var::State;
    match (variant, player) {
        (_, 1) => vec![LinearForm::difference(s(2), s(0)), LinearForm::difference(s(3), s(1))],
        (PursuitVariant::Base, _) => vec![LinearForm::deviation(s(2), 0.0), LinearForm::deviation(s(3), 0.0)],
        (PursuitVariant::Aligned, _) => vec![LinearForm::difference(s(2), s(3))],
        (PursuitVariant::Biased, _) => vec![
            LinearForm::new(vec![(s(0), 1.0), (s(2), -2.0)], 0.0),
            LinearForm::new(vec![(s(1), 1.0), (s(3), -2.0)], 0.0),
        ],
    }
}

/// Closed-form stage cost, written out coordinate by coordinate.
pub fn pursuit_stage_cost(variant: PursuitVariant, player: usize, x: &Vector, u: &Vector) -> f64 {
    let effort = u[2 * player].powi(2) + u[2 * player + 1].powi(2);
    let state = match (variant, player) {
        (_, 1) => (x[2] - x[0]).powi(2) + (x[3] - x[1]).powi(2),
        (PursuitVariant::Base, _) => x[2].powi(2) + x[3].powi(2),
        (PursuitVariant::Aligned, _) => (x[2] - x[3]).powi(2),
        (PursuitVariant::Biased, _) => (x[0] - 2.0 * x[2]).powi(2) + (x[1] - 2.0 * x[3]).powi(2),
    };
    state + effort
}

/// State weight `Q^i` in the `1/2 x'Qx` convention.
fn state_weight(variant: PursuitVariant, player: usize) -> Matrix {
    #[rustfmt::skip]
    let q = match (variant, player) {
        (_, 1) => [
             2.0,  0.0, -2.0,  0.0,
             0.0,  2.0,  0.0, -2.0,
            -2.0,  0.0,  2.0,  0.0,
             0.0, -2.0,  0.0,  2.0,
        ],
        (PursuitVariant::Base, _) => [
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 2.0, 0.0,
            0.0, 0.0, 0.0, 2.0,
        ],
        (PursuitVariant::Aligned, _) => [
            0.0, 0.0,  0.0,  0.0,
            0.0, 0.0,  0.0,  0.0,
            0.0, 0.0,  2.0, -2.0,
            0.0, 0.0, -2.0,  2.0,
        ],
        (PursuitVariant::Biased, _) => [
             2.0,  0.0, -4.0,  0.0,
             0.0,  2.0,  0.0, -4.0,
            -4.0,  0.0,  8.0,  0.0,
             0.0, -4.0,  0.0,  8.0,
        ],
    };
    Matrix::from_row_slice(4, 4, &q)
}

fn control_weight(player: usize) -> Matrix {
    let mut r = Matrix::zeros(4, 4);
    r[(2 * player, 2 * player)] = 2.0;
    r[(2 * player + 1, 2 * player + 1)] = 2.0;
    r
}

/// The case-study game as explicit quadratic blocks.
pub fn build_lq_pursuit(variant: PursuitVariant, horizon: usize) -> Result<AffineLQGame> {
    let shape = shape(horizon)?;
    let stage: Vec<QuadraticCost> =
        (0..2).map(|i| QuadraticCost::pure(state_weight(variant, i), control_weight(i))).collect();
    AffineLQGame::new(shape, vec![stage_dynamics(); horizon - 1], vec![stage; horizon])
}

/// Parameterised form: one unit-weight basis per player (its state term),
/// with control effort fixed.
pub fn pursuit_param_model(variant: PursuitVariant, horizon: usize) -> Result<(LinearDynamics, ParamCost)> {
    let shape = shape(horizon)?;
    let dynamics = LinearDynamics::time_invariant(shape.clone(), stage_dynamics());
    let bases: Vec<Vec<Arc<dyn StageTerm>>> =
        (0..2).map(|i| vec![Arc::new(SquaredResiduals::new(state_rows(variant, i))) as Arc<dyn StageTerm>]).collect();
    let fixed: Vec<Vec<Arc<dyn StageTerm>>> = (0..2)
        .map(|i| vec![Arc::new(SquaredResiduals::norm_of([Var::Control(2 * i), Var::Control(2 * i + 1)])) as _])
        .collect();
    Ok((dynamics, ParamCost::new(shape, bases, fixed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn expanded_blocks_match_scalar_costs() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for variant in PursuitVariant::ALL {
            let game = build_lq_pursuit(variant, 3).unwrap();
            let (_, cost) = pursuit_param_model(variant, 3).unwrap();
            for _ in 0..50 {
                let x = Vector::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
                let u = Vector::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
                for i in 0..2 {
                    let exact = pursuit_stage_cost(variant, i, &x, &u);
                    assert!((game.cost(0, i).value(&x, &u) - exact).abs() <= 1e-10 * (1.0 + exact));
                    assert!((cost.stage_cost(i, &[1.0, 1.0], &x, &u) - exact).abs() <= 1e-10 * (1.0 + exact));
                }
            }
        }
    }

    #[test]
    fn biased_variant_cross_term() {
        let q = state_weight(PursuitVariant::Biased, 0);
        assert_eq!(q[(0, 2)], -4.0);
        assert_eq!(q[(1, 3)], -4.0);
    }

    #[test]
    fn names_round_trip() {
        for v in PursuitVariant::ALL {
            assert_eq!(v.model_name().parse::<PursuitVariant>().unwrap(), v);
        }
        assert!("lq_chase".parse::<PursuitVariant>().is_err());
    }
}
