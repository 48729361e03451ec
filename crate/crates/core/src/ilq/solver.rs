//! Iterative LQ game solver: repeatedly solve the feedback equilibrium of
//! the local LQ model and step toward it.

use crate::error::{GameError, Result};
use crate::game::{rollout, AffineLQGame, Dynamics, FeedbackStrategy, ParamCost, Trajectory};
use crate::ilq::approx::{linearize_quadraticize, PSD_FLOOR};
use crate::linalg::Vector;
use crate::nash::solve_fbne_lq;

#[derive(Debug, Clone, PartialEq)]
pub struct IlqOptions {
    pub max_iterations: usize,
    /// Convergence threshold on `max_t |x_t^new - x_t^old|_inf`.
    pub tolerance: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// A trial step is rejected if it moves any state by more than
    /// `trust_scale * max(1, max |x|)`.
    pub trust_scale: f64,
    pub psd_floor: f64,
}

impl Default for IlqOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-6,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            max_backtracks: 20,
            trust_scale: 10.0,
            psd_floor: PSD_FLOOR,
        }
    }
}

impl IlqOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.initial_step <= 1.0
            && self.tolerance > 0.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.trust_scale > 0.0
            && self.psd_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GameError::Config(format!("invalid forward-solver options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct IlqResult {
    pub trajectory: Trajectory,
    /// Rolling this out on the nonlinear dynamics reproduces `trajectory`.
    pub strategy: FeedbackStrategy,
    /// Local LQ model (with per-basis decomposition) about `trajectory`.
    pub approximation: AffineLQGame,
    /// Number of LQ solves performed.
    pub iterations: usize,
    pub converged: bool,
    /// Successive-trajectory max-norm change per accepted iteration.
    pub residuals: Vec<f64>,
}

/// Strategy whose first-order effect around `current` is a step of size
/// `step` toward the LQ equilibrium:
/// `u = u_prev - P (x - x_prev) + step * (u_lq(x_prev) - u_prev)`.
pub(crate) fn blend(lq: &FeedbackStrategy, current: &Trajectory, step: f64) -> FeedbackStrategy {
    let feedforward = lq
        .feedforward
        .iter()
        .enumerate()
        .map(|(t, alpha)| {
            let anchor = &current.controls[t] + &lq.gains[t] * &current.states[t];
            alpha * step - anchor * (1.0 - step)
        })
        .collect();
    FeedbackStrategy { gains: lq.gains.clone(), feedforward }
}

/// Open-loop replay of `controls` expressed as a feedback strategy.
pub(crate) fn open_loop_strategy(traj: &Trajectory, n: usize) -> FeedbackStrategy {
    let m = traj.controls.first().map_or(0, Vector::len);
    FeedbackStrategy {
        gains: vec![crate::linalg::Matrix::zeros(m, n); traj.controls.len()],
        feedforward: traj.controls.iter().map(|u| -u).collect(),
    }
}

/// Starting trajectory: the warm start's controls replayed from `x1`, or
/// zero controls.
pub(crate) fn initial_trajectory(dynamics: &dyn Dynamics, x1: &Vector, warm_start: Option<&Trajectory>) -> Result<Trajectory> {
    let shape = dynamics.shape();
    if let Some(warm) = warm_start {
        warm.check_shape(shape)?;
        if let Ok(traj) = warm.replay_controls(x1, dynamics) {
            return Ok(traj);
        }
    }
    rollout(&FeedbackStrategy::zeros(shape), x1, dynamics)
}

pub(crate) fn check_inputs(dynamics: &dyn Dynamics, cost: &ParamCost, theta: &[f64], x1: &Vector) -> Result<()> {
    if dynamics.shape() != cost.shape() {
        return Err(GameError::Shape("dynamics and cost shapes differ".into()));
    }
    cost.check_theta(theta)?;
    if x1.len() != cost.shape().n() {
        return Err(GameError::Shape(format!("initial state has length {}, expected {}", x1.len(), cost.shape().n())));
    }
    if x1.iter().chain(theta).any(|v| !v.is_finite()) {
        return Err(GameError::Domain("initial state and parameters must be finite".into()));
    }
    Ok(())
}

pub fn ilqgames_solve(
    dynamics: &dyn Dynamics,
    cost: &ParamCost,
    theta: &[f64],
    x1: &Vector,
    warm_start: Option<&Trajectory>,
    opts: &IlqOptions,
) -> Result<IlqResult> {
    opts.validate()?;
    check_inputs(dynamics, cost, theta, x1)?;
    let n = x1.len();

    let mut current = initial_trajectory(dynamics, x1, warm_start)?;
    let mut strategy = open_loop_strategy(&current, n);
    let mut best: Option<(f64, Trajectory, FeedbackStrategy)> = None;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let game = linearize_quadraticize(dynamics, cost, theta, &current, opts.psd_floor)?;
        let lq = solve_fbne_lq(&game)?;
        let trust = opts.trust_scale * current.max_abs_state().max(1.0);

        let mut step = opts.initial_step;
        let mut accepted = None;
        let mut diverged = None;
        for _ in 0..=opts.max_backtracks {
            let candidate = blend(&lq.strategy, &current, step);
            match rollout(&candidate, x1, dynamics) {
                Ok(traj) => {
                    let change = traj.max_state_deviation(&current);
                    if change <= trust {
                        accepted = Some((traj, candidate, change));
                        break;
                    }
                }
                Err(e) => diverged = Some(e),
            }
            step *= opts.backtrack_factor;
        }
        let Some((traj, candidate, change)) = accepted else {
            if best.is_none() {
                if let Some(e) = diverged {
                    return Err(e);
                }
            }
            break;
        };
        residuals.push(change);
        current = traj;
        strategy = candidate;
        if change <= opts.tolerance {
            converged = true;
            break;
        }
        if best.as_ref().is_none_or(|(r, _, _)| change < *r) {
            best = Some((change, current.clone(), strategy.clone()));
        }
    }

    if !converged {
        if let Some((_, traj, strat)) = best {
            current = traj;
            strategy = strat;
        }
    }
    let approximation = linearize_quadraticize(dynamics, cost, theta, &current, opts.psd_floor)?;
    Ok(IlqResult { trajectory: current, strategy, approximation, iterations, converged, residuals })
}
