use std::sync::Arc;

use crate::error::{GameError, Result};
use crate::game::{Dynamics, ObservationSet, ParamCost, Trajectory};
use crate::ilq::IlqOptions;
use crate::linalg::Vector;

/// Settings of the alternating gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseOptions {
    /// Iteration budget `K`.
    pub max_iterations: usize,
    /// Stop once an accepted parameter step moves `theta` by at most this (L2).
    pub tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// First trial step of the first search for each variable.
    pub initial_step: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Later searches start from `step_growth` times the variable's last
    /// accepted step, capped at `max_step`. `1.0` restarts every search from
    /// the previous accepted step.
    pub step_growth: f64,
    pub max_step: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            armijo: 1e-4,
            initial_step: 1.0,
            shrink: 0.5,
            max_backtracks: 25,
            step_growth: 2.0,
            max_step: 1e4,
        }
    }
}

/// Forward map used inside the inverse solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardModel {
    /// Feedback Nash equilibrium via iterative LQ.
    Feedback,
    /// Open-loop Nash equilibrium of the iterated local LQ model, a stand-in
    /// for open-loop inverse methods.
    OpenLoopSurrogate,
}

impl ForwardModel {
    pub fn label(self) -> &'static str {
        match self {
            ForwardModel::Feedback => "FBNE",
            ForwardModel::OpenLoopSurrogate => "OLNE-surrogate",
        }
    }
}

/// Recover cost parameters and the initial state from observations.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub dynamics: Arc<dyn Dynamics>,
    pub cost: ParamCost,
    pub observations: ObservationSet,
    /// Weight `lambda` of the `lambda |theta|^2` penalty.
    pub regularization: f64,
    pub theta0: Vec<f64>,
    pub x1_0: Vector,
    pub options: InverseOptions,
    pub forward: IlqOptions,
}

impl InverseProblem {
    /// Problem with all-ones `theta0` and `x1_0` from [`initial_state_guess`].
    pub fn new(dynamics: Arc<dyn Dynamics>, cost: ParamCost, observations: ObservationSet, nominal_state: &Vector) -> Self {
        let theta0 = vec![1.0; cost.num_params()];
        let x1_0 = initial_state_guess(&observations, nominal_state);
        Self {
            dynamics,
            cost,
            observations,
            regularization: 0.0,
            theta0,
            x1_0,
            options: InverseOptions::default(),
            forward: IlqOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.cost.shape();
        if self.dynamics.shape() != shape {
            return Err(GameError::Shape("dynamics and cost shapes differ".into()));
        }
        self.cost.check_theta(&self.theta0)?;
        if self.x1_0.len() != shape.n() {
            return Err(GameError::Shape("initial-state guess has the wrong length".into()));
        }
        if self.theta0.iter().chain(self.x1_0.iter()).any(|v| !v.is_finite()) {
            return Err(GameError::Domain("initial guesses must be finite".into()));
        }
        self.observations.model.validate(shape.n(), shape.horizon())?;
        if self.observations.measurements.len() != self.observations.model.times.len()
            || self.observations.measurements.iter().any(|y| y.len() != self.observations.model.selection.len())
        {
            return Err(GameError::Shape("measurement sizes do not match the observation model".into()));
        }
        if !(self.regularization >= 0.0) {
            return Err(GameError::Domain("regularization weight must be non-negative".into()));
        }
        let o = &self.options;
        if !(o.tolerance > 0.0 && o.armijo > 0.0 && o.armijo < 1.0 && o.initial_step > 0.0 && o.shrink > 0.0 && o.shrink < 1.0
            && o.step_growth >= 1.0
            && o.max_step >= o.initial_step)
        {
            return Err(GameError::Config(format!("invalid inverse-solver options: {o:?}")));
        }
        self.forward.validate()
    }
}

/// Initial-state guess: observed coordinates from the earliest observation,
/// `nominal` for the rest.
pub fn initial_state_guess(observations: &ObservationSet, nominal: &Vector) -> Vector {
    let mut x = nominal.clone();
    if let Some(y) = observations.measurements.first() {
        for (k, &idx) in observations.model.selection.iter().enumerate() {
            x[idx] = y[k];
        }
    }
    x
}

/// Loss split into its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// `y_t - h(x_t)` per observed stage; empty when the forward solve failed.
    pub residuals: Vec<Vector>,
    pub regularization: f64,
}

impl LossValue {
    pub fn failed() -> Self {
        Self { loss: f64::INFINITY, residuals: Vec::new(), regularization: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite()
    }

    /// Sum of squared residuals.
    pub fn data_term(&self) -> f64 {
        self.residuals.iter().map(|r| r.norm_squared()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    InitialState,
    Parameters,
}

/// One accepted line-search step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    pub kind: StepKind,
    pub step_size: f64,
    pub loss_before: f64,
    pub loss_after: f64,
}

/// Iterate history and outcome of an inverse solve.
#[derive(Debug, Clone)]
pub struct InverseReport {
    /// `"FBNE"` or `"OLNE-surrogate"`.
    pub method: &'static str,
    /// Iterates after each outer iteration; index 0 is the initial guess.
    pub thetas: Vec<Vec<f64>>,
    pub x1s: Vec<Vector>,
    pub losses: Vec<f64>,
    pub best: usize,
    pub converged: bool,
    pub accepted_steps: usize,
    pub line_search_failures: usize,
    pub steps: Vec<StepRecord>,
    /// Forward solution at the best iterate under the method's own model.
    pub predicted: Option<Trajectory>,
}

impl InverseReport {
    pub fn theta(&self) -> &[f64] {
        &self.thetas[self.best]
    }

    pub fn x1(&self) -> &Vector {
        &self.x1s[self.best]
    }

    pub fn loss(&self) -> f64 {
        self.losses[self.best]
    }

    pub fn iterations(&self) -> usize {
        self.thetas.len() - 1
    }
}
