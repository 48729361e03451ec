//! Open-loop counterpart of the iterative LQ solver: the local LQ model is
//! solved for its open-loop equilibrium and the control sequence is blended
//! toward it.

use crate::error::Result;
use crate::game::{AffineLQGame, Dynamics, ParamCost, Trajectory};
use crate::ilq::approx::linearize_quadraticize;
use crate::ilq::solver::{check_inputs, initial_trajectory, IlqOptions};
use crate::linalg::Vector;
use crate::nash::solve_olne_lq;

#[derive(Debug, Clone)]
pub struct OpenLoopIlqResult {
    pub trajectory: Trajectory,
    /// Local LQ model about `trajectory`.
    pub approximation: AffineLQGame,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
}

pub fn ilq_olne_solve(
    dynamics: &dyn Dynamics,
    cost: &ParamCost,
    theta: &[f64],
    x1: &Vector,
    warm_start: Option<&Trajectory>,
    opts: &IlqOptions,
) -> Result<OpenLoopIlqResult> {
    opts.validate()?;
    check_inputs(dynamics, cost, theta, x1)?;
    let mut current = initial_trajectory(dynamics, x1, warm_start)?;
    let mut best: Option<(f64, Trajectory)> = None;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let game = linearize_quadraticize(dynamics, cost, theta, &current, opts.psd_floor)?;
        let target = solve_olne_lq(&game, x1)?.plan.controls;
        let trust = opts.trust_scale * current.max_abs_state().max(1.0);

        let mut step = opts.initial_step;
        let mut accepted = None;
        let mut diverged = None;
        for _ in 0..=opts.max_backtracks {
            let controls = current.controls.iter().zip(&target).map(|(u, v)| u + (v - u) * step).collect();
            let trial = Trajectory { states: current.states.clone(), controls };
            match trial.replay_controls(x1, dynamics) {
                Ok(traj) => {
                    let change = traj.max_state_deviation(&current);
                    if change <= trust {
                        accepted = Some((traj, change));
                        break;
                    }
                }
                Err(e) => diverged = Some(e),
            }
            step *= opts.backtrack_factor;
        }
        let Some((traj, change)) = accepted else {
            if best.is_none() {
                if let Some(e) = diverged {
                    return Err(e);
                }
            }
            break;
        };
        residuals.push(change);
        current = traj;
        if change <= opts.tolerance {
            converged = true;
            break;
        }
        if best.as_ref().is_none_or(|(r, _)| change < *r) {
            best = Some((change, current.clone()));
        }
    }

    if !converged {
        if let Some((_, traj)) = best {
            current = traj;
        }
    }
    let approximation = linearize_quadraticize(dynamics, cost, theta, &current, opts.psd_floor)?;
    Ok(OpenLoopIlqResult { trajectory: current, approximation, iterations, converged, residuals })
}
