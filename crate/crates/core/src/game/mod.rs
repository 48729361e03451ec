//! Shared game types: shapes, trajectories, dynamics, parameterised costs,
//! LQ games, feedback strategies and observation models.

mod cost;
mod dynamics;
mod lq;
mod observation;
mod shape;
mod strategy;
mod terms;
mod trajectory;

pub use cost::{total_cost, ParamCost};
pub use dynamics::{finite_difference_jacobians, Dynamics, LinearDynamics};
pub use lq::{AffineLQGame, BasisDecomposition, QuadraticCost, StageDynamics};
pub use observation::{apply_observation, apply_observation_with, ObservationModel, ObservationSet};
pub use shape::GameShape;
pub use strategy::{rollout, FeedbackStrategy};
pub use terms::{finite_difference_derivatives, LinearForm, LogDistance, QuadraticForm, SquaredResiduals, StageTerm, Var};
pub use trajectory::{relative_state_error, state_distance, Trajectory};
