use crate::error::{GameError, Result};
use crate::game::{Dynamics, GameShape, Trajectory};
use crate::linalg::{Matrix, Vector};

/// Affine state feedback `u_t = -P_t x_t - alpha_t` for every stage.
///
/// Gains are stored jointly: rows `control_range(i)` of `gains[t]` are player
/// `i`'s `P_t^i`, and likewise for the feedforward term.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackStrategy {
    pub gains: Vec<Matrix>,
    pub feedforward: Vec<Vector>,
}

impl FeedbackStrategy {
    pub fn zeros(shape: &GameShape) -> Self {
        let stages = shape.horizon() - 1;
        Self {
            gains: vec![Matrix::zeros(shape.m(), shape.n()); stages],
            feedforward: vec![Vector::zeros(shape.m()); stages],
        }
    }

    pub fn stages(&self) -> usize {
        self.gains.len()
    }

    pub fn control(&self, t: usize, x: &Vector) -> Vector {
        -(&self.gains[t] * x) - &self.feedforward[t]
    }

    /// `P_t^i` for one player.
    pub fn player_gain(&self, shape: &GameShape, t: usize, player: usize) -> Matrix {
        let r = shape.control_range(player);
        self.gains[t].rows(r.start, r.len()).into_owned()
    }

    pub fn check_shape(&self, shape: &GameShape) -> Result<()> {
        let ok = self.gains.len() + 1 == shape.horizon()
            && self.feedforward.len() == self.gains.len()
            && self.gains.iter().all(|p| p.shape() == (shape.m(), shape.n()))
            && self.feedforward.iter().all(|a| a.len() == shape.m());
        if ok {
            Ok(())
        } else {
            Err(GameError::Shape("strategy dimensions do not match the game".into()))
        }
    }
}

/// Close the loop of `strategy` through `dynamics` from `x1`.
pub fn rollout(strategy: &FeedbackStrategy, x1: &Vector, dynamics: &dyn Dynamics) -> Result<Trajectory> {
    let shape = dynamics.shape();
    strategy.check_shape(shape)?;
    if x1.len() != shape.n() {
        return Err(GameError::Shape(format!("initial state has length {}, expected {}", x1.len(), shape.n())));
    }
    if x1.iter().any(|v| !v.is_finite()) {
        return Err(GameError::Divergence { stage: 0 });
    }
    let horizon = shape.horizon();
    let mut states = Vec::with_capacity(horizon);
    let mut controls = Vec::with_capacity(horizon - 1);
    states.push(x1.clone());
    for t in 0..horizon - 1 {
        let u = strategy.control(t, &states[t]);
        let next = dynamics.step(t, &states[t], &u);
        if next.iter().chain(u.iter()).any(|v| !v.is_finite()) {
            return Err(GameError::Divergence { stage: t + 1 });
        }
        controls.push(u);
        states.push(next);
    }
    Ok(Trajectory { states, controls })
}
