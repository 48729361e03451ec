//! Scalar stage-cost terms over the stacked point `z = [x; u]`.

use std::fmt::Debug;

use crate::linalg::{Matrix, Vector};

/// A twice-differentiable scalar function of `(x, u)`.
///
/// Gradients and Hessians are taken with respect to `z = [x; u]`, so they
/// have length / size `n + m`.
pub trait StageTerm: Send + Sync + Debug {
    fn value(&self, x: &Vector, u: &Vector) -> f64;
    fn gradient(&self, x: &Vector, u: &Vector) -> Vector;
    fn hessian(&self, x: &Vector, u: &Vector) -> Matrix;

    /// Whether the Hessian is PSD everywhere, so projection can be skipped.
    fn convex(&self) -> bool {
        false
    }
}

/// A coordinate of `x` or of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    State(usize),
    Control(usize),
}

impl Var {
    fn index(self, n: usize) -> usize {
        match self {
            Var::State(k) => k,
            Var::Control(k) => n + k,
        }
    }

    fn read(self, x: &Vector, u: &Vector) -> f64 {
        match self {
            Var::State(k) => x[k],
            Var::Control(k) => u[k],
        }
    }
}

/// Affine scalar `sum_k c_k z_k - offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub coeffs: Vec<(Var, f64)>,
    pub offset: f64,
}

impl LinearForm {
    pub fn new(coeffs: Vec<(Var, f64)>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    /// `z_k - target`.
    pub fn deviation(var: Var, target: f64) -> Self {
        Self::new(vec![(var, 1.0)], target)
    }

    /// `z_a - z_b`.
    pub fn difference(a: Var, b: Var) -> Self {
        Self::new(vec![(a, 1.0), (b, -1.0)], 0.0)
    }

    fn eval(&self, x: &Vector, u: &Vector) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * v.read(x, u)).sum::<f64>() - self.offset
    }
}

/// `weight * sum_r (a_r . z - o_r)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredResiduals {
    pub rows: Vec<LinearForm>,
    pub weight: f64,
}

impl SquaredResiduals {
    pub fn new(rows: Vec<LinearForm>) -> Self {
        Self { rows, weight: 1.0 }
    }

    pub fn single(row: LinearForm) -> Self {
        Self::new(vec![row])
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// `||z_range||^2` over a contiguous block of coordinates.
    pub fn norm_of(vars: impl IntoIterator<Item = Var>) -> Self {
        Self::new(vars.into_iter().map(|v| LinearForm::deviation(v, 0.0)).collect())
    }
}

impl StageTerm for SquaredResiduals {
    fn convex(&self) -> bool {
        self.weight >= 0.0
    }

    fn value(&self, x: &Vector, u: &Vector) -> f64 {
        self.weight * self.rows.iter().map(|r| r.eval(x, u).powi(2)).sum::<f64>()
    }

    fn gradient(&self, x: &Vector, u: &Vector) -> Vector {
        let n = x.len();
        let mut g = Vector::zeros(n + u.len());
        for r in &self.rows {
            let e = r.eval(x, u);
            for &(v, c) in &r.coeffs {
                g[v.index(n)] += 2.0 * self.weight * e * c;
            }
        }
        g
    }

    fn hessian(&self, x: &Vector, u: &Vector) -> Matrix {
        let n = x.len();
        let dim = n + u.len();
        let mut h = Matrix::zeros(dim, dim);
        for r in &self.rows {
            for &(va, ca) in &r.coeffs {
                for &(vb, cb) in &r.coeffs {
                    h[(va.index(n), vb.index(n))] += 2.0 * self.weight * ca * cb;
                }
            }
        }
        h
    }
}

/// `-weight * log((z_a0 - z_b0)^2 + (z_a1 - z_b1)^2)`, a planar
/// log-barrier on the distance between two points. Infinite when the points
/// coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDistance {
    pub first: [usize; 2],
    pub second: [usize; 2],
    pub weight: f64,
}

impl LogDistance {
    fn delta(&self, x: &Vector) -> [f64; 2] {
        [x[self.first[0]] - x[self.second[0]], x[self.first[1]] - x[self.second[1]]]
    }
}

impl StageTerm for LogDistance {
    fn value(&self, x: &Vector, _u: &Vector) -> f64 {
        let [dx, dy] = self.delta(x);
        let d2 = dx * dx + dy * dy;
        if d2 == 0.0 {
            return f64::INFINITY;
        }
        -self.weight * d2.ln()
    }

    fn gradient(&self, x: &Vector, u: &Vector) -> Vector {
        let n = x.len();
        let mut g = Vector::zeros(n + u.len());
        let d = self.delta(x);
        let d2 = d[0] * d[0] + d[1] * d[1];
        for k in 0..2 {
            let dk = -self.weight * 2.0 * d[k] / d2;
            g[self.first[k]] += dk;
            g[self.second[k]] -= dk;
        }
        g
    }

    fn hessian(&self, x: &Vector, u: &Vector) -> Matrix {
        let n = x.len();
        let dim = n + u.len();
        let d = self.delta(x);
        let d2 = d[0] * d[0] + d[1] * d[1];
        // Hessian in delta-coordinates, then pulled back through delta = p_a - p_b
        let mut local = [[0.0; 2]; 2];
        for (a, row) in local.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let eye = if a == b { 1.0 } else { 0.0 };
                *entry = -self.weight * (2.0 * eye / d2 - 4.0 * d[a] * d[b] / (d2 * d2));
            }
        }
        let mut h = Matrix::zeros(dim, dim);
        for a in 0..2 {
            for b in 0..2 {
                let v = local[a][b];
                h[(self.first[a], self.first[b])] += v;
                h[(self.second[a], self.second[b])] += v;
                h[(self.first[a], self.second[b])] -= v;
                h[(self.second[a], self.first[b])] -= v;
            }
        }
        h
    }
}

/// `1/2 z^T H z + l^T z + c` with a fixed symmetric `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub hessian: Matrix,
    pub linear: Vector,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn new(hessian: Matrix, linear: Vector, constant: f64) -> Self {
        Self { hessian, linear, constant }
    }

    /// `1/2 x^T Q x` on the state block of a game with `m` controls.
    pub fn state(q: &Matrix, m: usize) -> Self {
        let n = q.nrows();
        let mut h = Matrix::zeros(n + m, n + m);
        h.view_mut((0, 0), (n, n)).copy_from(q);
        Self::new(h, Vector::zeros(n + m), 0.0)
    }

    /// `1/2 u^T R u` on the control block.
    pub fn control(r: &Matrix, n: usize) -> Self {
        let m = r.nrows();
        let mut h = Matrix::zeros(n + m, n + m);
        h.view_mut((n, n), (m, m)).copy_from(r);
        Self::new(h, Vector::zeros(n + m), 0.0)
    }

    fn stack(x: &Vector, u: &Vector) -> Vector {
        let mut z = Vector::zeros(x.len() + u.len());
        z.rows_mut(0, x.len()).copy_from(x);
        z.rows_mut(x.len(), u.len()).copy_from(u);
        z
    }
}

impl StageTerm for QuadraticForm {
    fn value(&self, x: &Vector, u: &Vector) -> f64 {
        let z = Self::stack(x, u);
        0.5 * z.dot(&(&self.hessian * &z)) + self.linear.dot(&z) + self.constant
    }

    fn gradient(&self, x: &Vector, u: &Vector) -> Vector {
        let z = Self::stack(x, u);
        &self.hessian * z + &self.linear
    }

    fn hessian(&self, _x: &Vector, _u: &Vector) -> Matrix {
        self.hessian.clone()
    }
}

/// Central-difference gradient and Hessian of a term, for audits.
pub fn finite_difference_derivatives(term: &dyn StageTerm, x: &Vector, u: &Vector) -> (Vector, Matrix) {
    let n = x.len();
    let dim = n + u.len();
    let split = |z: &Vector| (z.rows(0, n).into_owned(), z.rows(n, dim - n).into_owned());
    let z0 = QuadraticForm::stack(x, u);
    let step = |k: usize| 1e-4 * z0[k].abs().max(1.0);
    let eval = |z: &Vector| {
        let (a, b) = split(z);
        term.value(&a, &b)
    };
    let grad_at = |z: &Vector| {
        let (a, b) = split(z);
        term.gradient(&a, &b)
    };
    let mut g = Vector::zeros(dim);
    let mut h = Matrix::zeros(dim, dim);
    for k in 0..dim {
        let hk = step(k);
        let mut zp = z0.clone();
        let mut zm = z0.clone();
        zp[k] += hk;
        zm[k] -= hk;
        g[k] = (eval(&zp) - eval(&zm)) / (2.0 * hk);
        let col = (grad_at(&zp) - grad_at(&zm)) / (2.0 * hk);
        h.set_column(k, &col);
    }
    (g, h)
}
