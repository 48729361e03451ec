//! Feedback and open-loop Nash solvers for dynamic games, an iterative LQ
//! solver for nonlinear games, and an inverse solver that recovers cost
//! parameters from partial, noisy trajectory observations.

pub mod error;
pub mod experiment;
pub mod game;
pub mod ilq;
pub mod inverse;
pub mod linalg;
pub mod nash;
pub mod zoo;

pub use error::{GameError, Result};
