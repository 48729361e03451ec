//! Iterative LQ solvers for nonlinear games.

mod approx;
mod open_loop;
mod solver;

pub use approx::{linearize_quadraticize, PSD_FLOOR};
pub use open_loop::{ilq_olne_solve, OpenLoopIlqResult};
pub use solver::{ilqgames_solve, IlqOptions, IlqResult};
