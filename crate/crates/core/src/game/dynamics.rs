use std::fmt::Debug;

use crate::game::lq::StageDynamics;
use crate::game::GameShape;
use crate::linalg::{Matrix, Vector};

/// Discrete-time joint dynamics `x_{t+1} = f_t(x_t, u_t)`.
///
/// Stages are zero-based: `t` runs over `0..horizon - 1`.
pub trait Dynamics: Send + Sync + Debug {
    fn shape(&self) -> &GameShape;

    fn step(&self, t: usize, x: &Vector, u: &Vector) -> Vector;

    /// Joint Jacobians `(df/dx, df/du)`; player `i`'s `B^i` is the column
    /// block `shape().control_range(i)` of the second matrix.
    fn jacobians(&self, t: usize, x: &Vector, u: &Vector) -> (Matrix, Matrix);
}

/// Time-varying affine dynamics `x_{t+1} = A_t x_t + B_t u_t + c_t`.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    shape: GameShape,
    stages: Vec<StageDynamics>,
}

impl LinearDynamics {
    pub fn new(shape: GameShape, stages: Vec<StageDynamics>) -> Self {
        assert_eq!(stages.len() + 1, shape.horizon(), "need one stage per transition");
        Self { shape, stages }
    }

    /// Same `(A, B, c)` at every stage.
    pub fn time_invariant(shape: GameShape, stage: StageDynamics) -> Self {
        let stages = vec![stage; shape.horizon() - 1];
        Self { shape, stages }
    }

    pub fn stages(&self) -> &[StageDynamics] {
        &self.stages
    }
}

impl Dynamics for LinearDynamics {
    fn shape(&self) -> &GameShape {
        &self.shape
    }

    fn step(&self, t: usize, x: &Vector, u: &Vector) -> Vector {
        let s = &self.stages[t];
        &s.a * x + &s.b * u + &s.c
    }

    fn jacobians(&self, t: usize, _x: &Vector, _u: &Vector) -> (Matrix, Matrix) {
        let s = &self.stages[t];
        (s.a.clone(), s.b.clone())
    }
}

/// Central-difference Jacobians, used to audit analytic ones.
pub fn finite_difference_jacobians(dynamics: &dyn Dynamics, t: usize, x: &Vector, u: &Vector) -> (Matrix, Matrix) {
    let n = x.len();
    let m = u.len();
    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, m);
    for k in 0..n {
        let h = 1e-6 * x[k].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (dynamics.step(t, &xp, u) - dynamics.step(t, &xm, u)) / (2.0 * h);
        a.set_column(k, &col);
    }
    for k in 0..m {
        let h = 1e-6 * u[k].abs().max(1.0);
        let mut up = u.clone();
        let mut um = u.clone();
        up[k] += h;
        um[k] -= h;
        let col = (dynamics.step(t, x, &up) - dynamics.step(t, x, &um)) / (2.0 * h);
        b.set_column(k, &col);
    }
    (a, b)
}
