//! Ready-made games, looked up by name.

mod dubins;
mod prop1;
mod pursuit;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

pub use dubins::{build_dubins2, build_dubins3, pose_indices, position_indices, DubinsDynamics, VEHICLE_CONTROL, VEHICLE_STATE};
pub use prop1::{build_prop1, prop1_param_model, PROP1_HORIZON};
pub use pursuit::{build_lq_pursuit, pursuit_param_model, pursuit_stage_cost, PursuitVariant};

use crate::error::{GameError, Result};
use crate::game::{Dynamics, GameShape, ParamCost};
use crate::linalg::Vector;

pub const MODEL_NAMES: [&str; 6] = ["dubins2", "dubins3", "lq_pursuit", "lq_pursuit_ghat", "lq_pursuit_ghhat", "prop1"];

/// Builder overrides; `None` keeps the model default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams {
    pub dt: Option<f64>,
    pub horizon: Option<usize>,
    pub target: Option<f64>,
}

/// Name and resolved builder parameters of an instantiated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDescriptor {
    pub name: String,
    pub shape: GameShape,
    /// Integration step, for sampled-data models.
    pub dt: Option<f64>,
    /// Lane target, for the platooning models.
    pub target: Option<f64>,
}

/// A game instance together with its reference parameters.
#[derive(Debug, Clone)]
pub struct ZooModel {
    pub descriptor: ModelDescriptor,
    pub dynamics: Arc<dyn Dynamics>,
    pub cost: ParamCost,
    /// Reference cost parameters.
    pub theta: Vec<f64>,
    /// Reference initial state.
    pub x1: Vector,
    /// Values used for initial-state coordinates that are never observed.
    pub nominal_state: Vector,
    /// Coordinates seen by the model's partial sensor.
    pub partial_selection: Vec<usize>,
    /// Coordinates perturbed when sampling unseen initial states.
    pub position_indices: Vec<usize>,
}

fn vehicles(states: &[[f64; 4]]) -> Vector {
    Vector::from_iterator(states.len() * 4, states.iter().flatten().copied())
}

pub fn build_model(name: &str, params: &ModelParams) -> Result<ZooModel> {
    let descriptor = |shape: &GameShape, dt, target| ModelDescriptor { name: name.to_string(), shape: shape.clone(), dt, target };
    match name {
        "dubins2" => {
            let (dt, horizon, target) = (params.dt.unwrap_or(0.1), params.horizon.unwrap_or(40), params.target.unwrap_or(0.0));
            let (dynamics, cost) = build_dubins2(dt, horizon, target)?;
            Ok(ZooModel {
                descriptor: descriptor(dynamics.shape(), Some(dt), Some(target)),
                dynamics: Arc::new(dynamics),
                cost,
                theta: vec![0.0, 8.0, 4.0, 4.0],
                x1: vehicles(&[[0.0, 0.5, FRAC_PI_2, 1.0], [1.0, 0.0, FRAC_PI_2, 1.0]]),
                nominal_state: vehicles(&[[0.0, 0.0, FRAC_PI_2, 1.0]; 2]),
                partial_selection: pose_indices(2),
                position_indices: position_indices(2),
            })
        }
        "dubins3" => {
            let (dt, horizon, target) = (params.dt.unwrap_or(0.1), params.horizon.unwrap_or(30), params.target.unwrap_or(0.2));
            let (dynamics, cost) = build_dubins3(dt, horizon, target)?;
            Ok(ZooModel {
                descriptor: descriptor(dynamics.shape(), Some(dt), Some(target)),
                dynamics: Arc::new(dynamics),
                cost,
                theta: vec![0.0, 4.0, 0.0, 4.0, 2.0],
                x1: vehicles(&[
                    [0.0, 1.0, FRAC_PI_2, 2.0],
                    [0.3, 0.0, FRAC_PI_2, 2.0],
                    [0.5, 0.5, FRAC_PI_2, 2.0],
                ]),
                // cruising speed of the fixed speed-tracking terms
                nominal_state: vehicles(&[[0.0, 0.0, FRAC_PI_2, 2.0]; 3]),
                partial_selection: pose_indices(3),
                position_indices: position_indices(3),
            })
        }
        "prop1" => {
            let (dynamics, cost) = prop1_param_model()?;
            Ok(ZooModel {
                descriptor: descriptor(dynamics.shape(), None, None),
                dynamics: Arc::new(dynamics),
                cost,
                theta: vec![1.0, 1.0],
                x1: Vector::from_element(1, 1.0),
                nominal_state: Vector::zeros(1),
                partial_selection: vec![0],
                position_indices: vec![0],
            })
        }
        _ => {
            let variant: PursuitVariant = name.parse()?;
            let horizon = params.horizon.unwrap_or(10);
            let (dynamics, cost) = pursuit_param_model(variant, horizon)?;
            Ok(ZooModel {
                descriptor: descriptor(dynamics.shape(), None, None),
                dynamics: Arc::new(dynamics),
                cost,
                theta: vec![1.0, 1.0],
                x1: Vector::from_vec(vec![1.0, -0.5, -1.0, 1.0]),
                nominal_state: Vector::zeros(4),
                partial_selection: (0..4).collect(),
                position_indices: (0..4).collect(),
            })
        }
    }
}

/// Checks a name against the registry without building anything.
pub fn check_model_name(name: &str) -> Result<()> {
    if MODEL_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(GameError::UnknownModel(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_builds() {
        for name in MODEL_NAMES {
            let model = build_model(name, &ModelParams::default()).unwrap();
            assert_eq!(model.theta.len(), model.cost.num_params());
            assert_eq!(model.x1.len(), model.descriptor.shape.n());
            assert_eq!(model.nominal_state.len(), model.x1.len());
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(build_model("tricycle", &ModelParams::default()), Err(GameError::UnknownModel(_))));
        assert!(check_model_name("tricycle").is_err());
    }

    #[test]
    fn paper_sizes() {
        let d2 = build_model("dubins2", &ModelParams::default()).unwrap();
        assert_eq!((d2.descriptor.shape.n(), d2.descriptor.shape.horizon()), (8, 40));
        assert_eq!(d2.cost.param_dims(), vec![2, 2]);
        let d3 = build_model("dubins3", &ModelParams::default()).unwrap();
        assert_eq!((d3.descriptor.shape.n(), d3.descriptor.shape.horizon()), (12, 30));
        assert_eq!(d3.cost.param_dims(), vec![2, 2, 1]);
    }
}
