//! Unicycle vehicles and the platooning cost families built on them.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{GameError, Result};
use crate::game::{Dynamics, GameShape, LinearForm, LogDistance, ParamCost, SquaredResiduals, StageTerm, Var};
use crate::linalg::{Matrix, Vector};

/// Per-vehicle state `[p_x, p_y, heading, speed]`, control `[turn rate, acceleration]`.
pub const VEHICLE_STATE: usize = 4;
pub const VEHICLE_CONTROL: usize = 2;

/// Independent unicycles, forward-Euler discretised with step `dt`.
#[derive(Debug, Clone)]
pub struct DubinsDynamics {
    shape: GameShape,
    dt: f64,
}

impl DubinsDynamics {
    pub fn new(vehicles: usize, horizon: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(GameError::Domain(format!("time step must be positive, got {dt}")));
        }
        let shape = GameShape::uniform(vehicles, horizon, VEHICLE_STATE, VEHICLE_CONTROL)?;
        Ok(Self { shape, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Dynamics for DubinsDynamics {
    fn shape(&self) -> &GameShape {
        &self.shape
    }

    fn step(&self, _t: usize, x: &Vector, u: &Vector) -> Vector {
        let mut next = x.clone();
        for k in 0..self.shape.num_players() {
            let (o, c) = (VEHICLE_STATE * k, VEHICLE_CONTROL * k);
            let (heading, speed) = (x[o + 2], x[o + 3]);
            next[o] += self.dt * speed * heading.cos();
            next[o + 1] += self.dt * speed * heading.sin();
            next[o + 2] += self.dt * u[c];
            next[o + 3] += self.dt * u[c + 1];
        }
        next
    }

    fn jacobians(&self, _t: usize, x: &Vector, _u: &Vector) -> (Matrix, Matrix) {
        let (n, m) = (self.shape.n(), self.shape.m());
        let mut a = Matrix::identity(n, n);
        let mut b = Matrix::zeros(n, m);
        for k in 0..self.shape.num_players() {
            let (o, c) = (VEHICLE_STATE * k, VEHICLE_CONTROL * k);
            let (sin, cos) = x[o + 2].sin_cos();
            let speed = x[o + 3];
            a[(o, o + 2)] = -self.dt * speed * sin;
            a[(o, o + 3)] = self.dt * cos;
            a[(o + 1, o + 2)] = self.dt * speed * cos;
            a[(o + 1, o + 3)] = self.dt * sin;
            b[(o + 2, c)] = self.dt;
            b[(o + 3, c + 1)] = self.dt;
        }
        (a, b)
    }
}

fn px(k: usize) -> Var {
    Var::State(VEHICLE_STATE * k)
}

fn heading(k: usize) -> Var {
    Var::State(VEHICLE_STATE * k + 2)
}

fn speed(k: usize) -> Var {
    Var::State(VEHICLE_STATE * k + 3)
}

fn effort(k: usize) -> Arc<dyn StageTerm> {
    Arc::new(SquaredResiduals::norm_of((0..VEHICLE_CONTROL).map(|j| Var::Control(VEHICLE_CONTROL * k + j))))
}

fn square(row: LinearForm) -> Arc<dyn StageTerm> {
    Arc::new(SquaredResiduals::single(row))
}

/// Two-vehicle platooning: vehicle 1 steers vehicle 2 into lane `target`.
///
/// Player 1 bases: `|p_x^1|^2`, `|p_x^2 - target|^2`.
/// Player 2 bases: `|p_x^2 - p_x^1|^2`, `|v^2 - 1|^2`.
/// Both players pay a unit-weight `|u^i|^2`.
pub fn build_dubins2(dt: f64, horizon: usize, target: f64) -> Result<(DubinsDynamics, ParamCost)> {
    let dynamics = DubinsDynamics::new(2, horizon, dt)?;
    let bases = vec![
        vec![square(LinearForm::deviation(px(0), 0.0)), square(LinearForm::deviation(px(1), target))],
        vec![square(LinearForm::difference(px(1), px(0))), square(LinearForm::deviation(speed(1), 1.0))],
    ];
    let fixed = vec![vec![effort(0)], vec![effort(1)]];
    let cost = ParamCost::new(dynamics.shape().clone(), bases, fixed)?;
    Ok((dynamics, cost))
}

/// Three-vehicle variant: the platoon meets a third vehicle that vehicle 2
/// avoids through a log-distance barrier.
///
/// Player 1 bases: `|p_x^1|^2`, `|p_x^2 - target|^2`; fixed `|v^1 - 2|^2`,
/// `|heading^1 - pi/2|^2`, `|u^1|^2`.
/// Player 2 bases: `|p_x^2|^2`, `|p_x^2 - p_x^1|^2`; fixed `|heading^2 - pi/2|^2`,
/// `|v^2 - 2|^2`, `-1/2 log |p^2 - p^3|^2`, `|u^2|^2`.
/// Player 3 basis: `|p_x^3 - 1/2|^2`; fixed `|u^3|^2`.
pub fn build_dubins3(dt: f64, horizon: usize, target: f64) -> Result<(DubinsDynamics, ParamCost)> {
    let dynamics = DubinsDynamics::new(3, horizon, dt)?;
    let bases = vec![
        vec![square(LinearForm::deviation(px(0), 0.0)), square(LinearForm::deviation(px(1), target))],
        vec![square(LinearForm::deviation(px(1), 0.0)), square(LinearForm::difference(px(1), px(0)))],
        vec![square(LinearForm::deviation(px(2), 0.5))],
    ];
    let barrier = LogDistance {
        first: [VEHICLE_STATE, VEHICLE_STATE + 1],
        second: [2 * VEHICLE_STATE, 2 * VEHICLE_STATE + 1],
        weight: 0.5,
    };
    let fixed: Vec<Vec<Arc<dyn StageTerm>>> = vec![
        vec![
            square(LinearForm::deviation(speed(0), 2.0)),
            square(LinearForm::deviation(heading(0), FRAC_PI_2)),
            effort(0),
        ],
        vec![
            square(LinearForm::deviation(heading(1), FRAC_PI_2)),
            square(LinearForm::deviation(speed(1), 2.0)),
            Arc::new(barrier),
            effort(1),
        ],
        vec![effort(2)],
    ];
    let cost = ParamCost::new(dynamics.shape().clone(), bases, fixed)?;
    Ok((dynamics, cost))
}

/// Position coordinates `(p_x, p_y)` of every vehicle.
pub fn position_indices(vehicles: usize) -> Vec<usize> {
    (0..vehicles).flat_map(|k| [VEHICLE_STATE * k, VEHICLE_STATE * k + 1]).collect()
}

/// Positions and headings of every vehicle (speeds excluded).
pub fn pose_indices(vehicles: usize) -> Vec<usize> {
    (0..vehicles).flat_map(|k| [VEHICLE_STATE * k, VEHICLE_STATE * k + 1, VEHICLE_STATE * k + 2]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{finite_difference_derivatives, finite_difference_jacobians};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn straight_line_step() {
        let d = DubinsDynamics::new(1, 2, 0.1).unwrap();
        let next = d.step(0, &Vector::from_vec(vec![0.0, 0.0, 0.0, 1.0]), &Vector::zeros(2));
        assert!((next - Vector::from_vec(vec![0.1, 0.0, 0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn jacobian_entries_at_zero_heading() {
        let d = DubinsDynamics::new(1, 2, 0.1).unwrap();
        let (a, _) = d.jacobians(0, &Vector::from_vec(vec![0.0, 0.0, 0.0, 1.0]), &Vector::zeros(2));
        assert_eq!(a[(0, 2)], 0.0);
        assert!((a[(0, 3)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn jacobians_match_central_differences() {
        let d = DubinsDynamics::new(3, 5, 0.1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Vector::from_fn(12, |_, _| rng.random_range(-3.0..3.0));
            let u = Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let (a, b) = d.jacobians(0, &x, &u);
            let (fa, fb) = finite_difference_jacobians(&d, 0, &x, &u);
            let scale = 1.0 + a.amax().max(b.amax());
            assert!((a - fa).amax() <= 1e-5 * scale);
            assert!((b - fb).amax() <= 1e-5 * scale);
        }
    }

    #[test]
    fn platoon_cost_at_reference_point() {
        let (_, cost) = build_dubins2(0.1, 40, 0.0).unwrap();
        let mut x = Vector::zeros(8);
        x[4] = 0.5;
        let theta = [0.0, 8.0, 4.0, 4.0];
        assert!((cost.stage_cost(0, &theta, &x, &Vector::zeros(4)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn three_vehicle_terms_match_finite_differences() {
        let (_, cost) = build_dubins3(0.1, 30, 0.2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = Vector::from_fn(12, |_, _| rng.random_range(-2.0..2.0));
            let u = Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            for i in 0..3 {
                for term in cost.bases(i).iter().chain(cost.fixed(i)) {
                    let (g, h) = finite_difference_derivatives(term.as_ref(), &x, &u);
                    let ga = term.gradient(&x, &u);
                    let ha = term.hessian(&x, &u);
                    assert!((&ga - g).amax() <= 1e-5 * (1.0 + ga.amax()));
                    assert!((&ha - h).amax() <= 1e-5 * (1.0 + ha.amax()));
                }
            }
        }
    }

    #[test]
    fn barrier_vanishes_at_unit_distance() {
        let (_, cost) = build_dubins3(0.1, 30, 0.2).unwrap();
        let mut x = Vector::zeros(12);
        x[4] = 1.0;
        let barrier = &cost.fixed(1)[2];
        assert_eq!(barrier.value(&x, &Vector::zeros(6)), 0.0);
    }
}
