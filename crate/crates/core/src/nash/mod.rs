//! Exact Nash equilibria of affine LQ games.

mod fbne;
mod olne;
mod prop1;

pub use fbne::{
    fbne_trajectory_lq, solve_fbne_lq, stage_stationarity_residual, FbneSolution, StageSystem, CONTROL_HESSIAN_FLOOR,
    STAGE_CONDITION_LIMIT, STAGE_RIDGE,
};
pub use olne::{solve_olne_lq, KktLayout, OlneKkt, OlneSolution, OpenLoopPlan};
pub(crate) use olne::{cost_operator, unpack};
pub use prop1::{prop1_last_gains, prop1_oracle, prop1_values};
