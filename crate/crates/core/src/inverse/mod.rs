//! Inverse feedback games: recover cost parameters and the initial state
//! from partial, noisy observations of an equilibrium trajectory.

mod gradient;
mod loss;
mod problem;
mod solver;

pub use gradient::{approx_grad_theta, approx_grad_theta_open_loop, approx_grad_x1, approx_grad_x1_open_loop};
pub use loss::{eval_loss, loss_of_trajectory};
pub use problem::{
    initial_state_guess, ForwardModel, InverseOptions, InverseProblem, InverseReport, LossValue, StepKind, StepRecord,
};
pub use solver::{solve_inverse, solve_inverse_olne_baseline};
