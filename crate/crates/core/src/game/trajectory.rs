use crate::error::{GameError, Result};
use crate::game::{Dynamics, GameShape};
use crate::linalg::Vector;

/// Joint state and control sequences: `T` states, `T - 1` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub controls: Vec<Vector>,
}

impl Trajectory {
    pub fn new(states: Vec<Vector>, controls: Vec<Vector>) -> Result<Self> {
        if states.len() < 2 || controls.len() + 1 != states.len() {
            return Err(GameError::Shape(format!(
                "trajectory needs T >= 2 states and T - 1 controls, got {} and {}",
                states.len(),
                controls.len()
            )));
        }
        Ok(Self { states, controls })
    }

    pub fn zeros(shape: &GameShape) -> Self {
        let t = shape.horizon();
        Self {
            states: vec![Vector::zeros(shape.n()); t],
            controls: vec![Vector::zeros(shape.m()); t - 1],
        }
    }

    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn initial_state(&self) -> &Vector {
        &self.states[0]
    }

    pub fn check_shape(&self, shape: &GameShape) -> Result<()> {
        if self.horizon() != shape.horizon() {
            return Err(GameError::Shape(format!(
                "trajectory horizon {} but game horizon {}",
                self.horizon(),
                shape.horizon()
            )));
        }
        if self.controls.len() + 1 != self.states.len() {
            return Err(GameError::Shape("control count must be T - 1".into()));
        }
        if self.states.iter().any(|x| x.len() != shape.n()) || self.controls.iter().any(|u| u.len() != shape.m()) {
            return Err(GameError::Shape(format!(
                "trajectory vectors do not match n = {}, m = {}",
                shape.n(),
                shape.m()
            )));
        }
        Ok(())
    }

    /// `max_t ||x_t - other_t||_inf` over states.
    pub fn max_state_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_state(&self) -> f64 {
        self.states.iter().map(|x| x.amax()).fold(0.0, f64::max)
    }

    /// All states stacked into one vector of length `T * n`.
    pub fn stacked_states(&self) -> Vector {
        let n = self.states[0].len();
        let mut out = Vector::zeros(n * self.states.len());
        for (t, x) in self.states.iter().enumerate() {
            out.rows_mut(t * n, n).copy_from(x);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().chain(&self.controls).all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Largest per-coordinate violation of `x_{t+1} = f_t(x_t, u_t)`.
    pub fn feasibility_residual(&self, dynamics: &dyn Dynamics) -> f64 {
        self.controls
            .iter()
            .enumerate()
            .map(|(t, u)| (dynamics.step(t, &self.states[t], u) - &self.states[t + 1]).amax())
            .fold(0.0, f64::max)
    }

    /// Replay the control sequence from a new initial state.
    pub fn replay_controls(&self, x1: &Vector, dynamics: &dyn Dynamics) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(self.states.len());
        states.push(x1.clone());
        for (t, u) in self.controls.iter().enumerate() {
            let next = dynamics.step(t, &states[t], u);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(GameError::Divergence { stage: t + 1 });
            }
            states.push(next);
        }
        Ok(Trajectory { states, controls: self.controls.clone() })
    }
}

/// Plain L2 distance between two stacked state sequences.
pub fn state_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (x - y).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `||a - b|| / ||b||` over stacked states.
pub fn relative_state_error(a: &Trajectory, b: &Trajectory) -> f64 {
    let denom = b.stacked_states().norm();
    let num = state_distance(a, b);
    if denom == 0.0 {
        num
    } else {
        num / denom
    }
}
