use std::ops::Range;
use std::sync::Arc;

use crate::error::{GameError, Result};
use crate::game::{GameShape, StageTerm, Trajectory};
use crate::linalg::Vector;

/// Per-player cost that is linear in a parameter vector:
/// `g^i(x, u) = sum_j theta^i_j b^i_j(x, u) + fixed^i(x, u)`.
///
/// Bases and fixed terms are time-invariant. The terminal cost of a player is
/// its stage cost evaluated at `u = 0`, which drops every control-dependent
/// part.
#[derive(Debug, Clone)]
pub struct ParamCost {
    shape: GameShape,
    bases: Vec<Vec<Arc<dyn StageTerm>>>,
    fixed: Vec<Vec<Arc<dyn StageTerm>>>,
    offsets: Vec<usize>,
}

impl ParamCost {
    pub fn new(
        shape: GameShape,
        bases: Vec<Vec<Arc<dyn StageTerm>>>,
        fixed: Vec<Vec<Arc<dyn StageTerm>>>,
    ) -> Result<Self> {
        let players = shape.num_players();
        if bases.len() != players || fixed.len() != players {
            return Err(GameError::Shape(format!(
                "cost has {} basis groups and {} fixed groups for {players} players",
                bases.len(),
                fixed.len()
            )));
        }
        let mut offsets = vec![0];
        for b in &bases {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        Ok(Self { shape, bases, fixed, offsets })
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    /// `d_i` for each player.
    pub fn param_dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    pub fn num_params(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Slice of the joint parameter vector owned by `player`.
    pub fn param_range(&self, player: usize) -> Range<usize> {
        self.offsets[player]..self.offsets[player + 1]
    }

    /// Player owning joint parameter index `k`.
    pub fn param_owner(&self, k: usize) -> usize {
        (0..self.shape.num_players()).find(|&i| self.param_range(i).contains(&k)).expect("parameter index in range")
    }

    pub fn bases(&self, player: usize) -> &[Arc<dyn StageTerm>] {
        &self.bases[player]
    }

    pub fn fixed(&self, player: usize) -> &[Arc<dyn StageTerm>] {
        &self.fixed[player]
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(GameError::Shape(format!(
                "expected {} cost parameters, got {}",
                self.num_params(),
                theta.len()
            )));
        }
        Ok(())
    }

    pub fn stage_cost(&self, player: usize, theta: &[f64], x: &Vector, u: &Vector) -> f64 {
        let weights = &theta[self.param_range(player)];
        let parametric: f64 = self.bases[player].iter().zip(weights).map(|(b, w)| w * b.value(x, u)).sum();
        let fixed: f64 = self.fixed[player].iter().map(|f| f.value(x, u)).sum();
        parametric + fixed
    }

    pub fn terminal_cost(&self, player: usize, theta: &[f64], x: &Vector) -> f64 {
        self.stage_cost(player, theta, x, &Vector::zeros(self.shape.m()))
    }
}

/// `J^i = sum_{t < T} g_t^i(x_t, u_t) + g_T^i(x_T)`.
pub fn total_cost(traj: &Trajectory, cost: &ParamCost, theta: &[f64], player: usize) -> Result<f64> {
    traj.check_shape(cost.shape())?;
    cost.check_theta(theta)?;
    cost.shape().check_player(player)?;
    let running: f64 = traj
        .controls
        .iter()
        .enumerate()
        .map(|(t, u)| cost.stage_cost(player, theta, &traj.states[t], u))
        .sum();
    Ok(running + cost.terminal_cost(player, theta, traj.states.last().unwrap()))
}
