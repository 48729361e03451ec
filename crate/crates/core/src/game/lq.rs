use crate::error::{GameError, Result};
use crate::game::{FeedbackStrategy, GameShape, Trajectory};
use crate::linalg::{asymmetry, symmetrize, Matrix, Vector};

/// `x_{t+1} = A x_t + B u_t + c` for one stage; `B` is `n x m` over the
/// joint control.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDynamics {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vector,
}

impl StageDynamics {
    pub fn linear(a: Matrix, b: Matrix) -> Self {
        let n = a.nrows();
        Self { a, b, c: Vector::zeros(n) }
    }

    pub fn apply(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u + &self.c
    }
}

/// One player's quadratic stage cost
/// `1/2 x'Qx + q'x + 1/2 u'Ru + r'u + u'Sx + constant`.
///
/// `R`, `r` and `S` range over the joint control; player `i`'s own block
/// `R^{ii}` sits on the diagonal at `control_range(i)`. At the terminal stage
/// the control parts are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: Matrix,
    pub q_lin: Vector,
    pub r: Matrix,
    pub r_lin: Vector,
    pub s: Matrix,
    pub constant: f64,
}

impl QuadraticCost {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            q: Matrix::zeros(n, n),
            q_lin: Vector::zeros(n),
            r: Matrix::zeros(m, m),
            r_lin: Vector::zeros(m),
            s: Matrix::zeros(m, n),
            constant: 0.0,
        }
    }

    /// Pure quadratic `1/2 x'Qx + 1/2 u'Ru`.
    pub fn pure(q: Matrix, r: Matrix) -> Self {
        let (n, m) = (q.nrows(), r.nrows());
        Self { q, r, ..Self::zeros(n, m) }
    }

    pub fn value(&self, x: &Vector, u: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x))
            + self.q_lin.dot(x)
            + 0.5 * u.dot(&(&self.r * u))
            + self.r_lin.dot(u)
            + u.dot(&(&self.s * x))
            + self.constant
    }

    pub fn terminal_value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.q_lin.dot(x) + self.constant
    }

    /// `self += w * other`.
    pub fn add_scaled(&mut self, other: &QuadraticCost, w: f64) {
        self.q += &other.q * w;
        self.q_lin += &other.q_lin * w;
        self.r += &other.r * w;
        self.r_lin += &other.r_lin * w;
        self.s += &other.s * w;
        self.constant += w * other.constant;
    }

    /// Keep the state parts only.
    pub fn state_part(&self) -> Self {
        let (n, m) = (self.q.nrows(), self.r.nrows());
        Self { q: self.q.clone(), q_lin: self.q_lin.clone(), constant: self.constant, ..Self::zeros(n, m) }
    }

    fn asymmetry(&self) -> f64 {
        asymmetry(&self.q).max(asymmetry(&self.r))
    }

    pub fn max_abs_diff(&self, other: &QuadraticCost) -> f64 {
        [
            (&self.q - &other.q).amax(),
            (&self.q_lin - &other.q_lin).amax(),
            (&self.r - &other.r).amax(),
            (&self.r_lin - &other.r_lin).amax(),
            (&self.s - &other.s).amax(),
            (self.constant - other.constant).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Cost blocks written as `fixed + sum_j theta_j * basis_j` per stage and
/// player. Indexed `[t][player]` and `[t][player][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDecomposition {
    pub fixed: Vec<Vec<QuadraticCost>>,
    pub bases: Vec<Vec<Vec<QuadraticCost>>>,
}

impl BasisDecomposition {
    pub fn param_dims(&self) -> Vec<usize> {
        self.bases[0].iter().map(Vec::len).collect()
    }

    /// Reassemble `[t][player]` cost blocks for a given `theta`.
    pub fn assemble(&self, theta: &[f64]) -> Vec<Vec<QuadraticCost>> {
        self.fixed
            .iter()
            .zip(&self.bases)
            .map(|(fixed_t, bases_t)| {
                let mut k = 0;
                fixed_t
                    .iter()
                    .zip(bases_t)
                    .map(|(fixed, player_bases)| {
                        let mut total = fixed.clone();
                        for basis in player_bases {
                            total.add_scaled(basis, theta[k]);
                            k += 1;
                        }
                        total
                    })
                    .collect()
            })
            .collect()
    }
}

/// Affine dynamics with per-player linear-quadratic costs over a finite
/// horizon. Holds `T - 1` dynamics stages and `T` cost stages; the last cost
/// stage is the terminal cost.
#[derive(Debug, Clone)]
pub struct AffineLQGame {
    shape: GameShape,
    dynamics: Vec<StageDynamics>,
    costs: Vec<Vec<QuadraticCost>>,
    basis: Option<BasisDecomposition>,
}

impl AffineLQGame {
    pub fn new(shape: GameShape, dynamics: Vec<StageDynamics>, mut costs: Vec<Vec<QuadraticCost>>) -> Result<Self> {
        let (n, m, horizon) = (shape.n(), shape.m(), shape.horizon());
        if dynamics.len() + 1 != horizon || costs.len() != horizon {
            return Err(GameError::Shape(format!(
                "horizon {horizon} needs {} dynamics stages and {horizon} cost stages, got {} and {}",
                horizon - 1,
                dynamics.len(),
                costs.len()
            )));
        }
        for d in &dynamics {
            if d.a.shape() != (n, n) || d.b.shape() != (n, m) || d.c.len() != n {
                return Err(GameError::Shape("dynamics block dimensions".into()));
            }
        }
        for stage in &costs {
            if stage.len() != shape.num_players() {
                return Err(GameError::Shape("one cost block per player per stage".into()));
            }
            for c in stage {
                if c.q.shape() != (n, n)
                    || c.q_lin.len() != n
                    || c.r.shape() != (m, m)
                    || c.r_lin.len() != m
                    || c.s.shape() != (m, n)
                {
                    return Err(GameError::Shape("cost block dimensions".into()));
                }
                if c.asymmetry() > 1e-12 * (1.0 + crate::linalg::max_abs(&c.q).max(crate::linalg::max_abs(&c.r))) {
                    return Err(GameError::Domain("quadratic cost blocks must be symmetric".into()));
                }
            }
        }
        for stage in costs.iter_mut() {
            for c in stage.iter_mut() {
                symmetrize(&mut c.q);
                symmetrize(&mut c.r);
            }
        }
        if let Some(last) = costs.last_mut() {
            for c in last.iter_mut() {
                *c = c.state_part();
            }
        }
        Ok(Self { shape, dynamics, costs, basis: None })
    }

    /// Game whose costs are `decomposition.assemble(theta)`.
    pub fn from_basis(
        shape: GameShape,
        dynamics: Vec<StageDynamics>,
        decomposition: BasisDecomposition,
        theta: &[f64],
    ) -> Result<Self> {
        let dims: usize = decomposition.param_dims().iter().sum();
        if dims != theta.len() {
            return Err(GameError::Shape(format!("expected {dims} parameters, got {}", theta.len())));
        }
        let costs = decomposition.assemble(theta);
        let mut game = Self::new(shape, dynamics, costs)?;
        game.basis = Some(decomposition);
        Ok(game)
    }

    /// Same dynamics and decomposition, costs reassembled at a new `theta`.
    pub fn reassemble(&self, theta: &[f64]) -> Result<Self> {
        let basis = self
            .basis
            .clone()
            .ok_or_else(|| GameError::Domain("game carries no per-basis decomposition".into()))?;
        Self::from_basis(self.shape.clone(), self.dynamics.clone(), basis, theta)
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn horizon(&self) -> usize {
        self.shape.horizon()
    }

    pub fn dynamics(&self) -> &[StageDynamics] {
        &self.dynamics
    }

    /// Cost blocks indexed `[t][player]`.
    pub fn costs(&self) -> &[Vec<QuadraticCost>] {
        &self.costs
    }

    pub fn cost(&self, t: usize, player: usize) -> &QuadraticCost {
        &self.costs[t][player]
    }

    pub fn basis(&self) -> Option<&BasisDecomposition> {
        self.basis.as_ref()
    }

    /// Same dynamics, new cost blocks (drops any basis decomposition).
    pub fn with_costs(&self, costs: Vec<Vec<QuadraticCost>>) -> Result<Self> {
        Self::new(self.shape.clone(), self.dynamics.clone(), costs)
    }

    /// Tail subgame over stages `start..T`.
    pub fn subgame(&self, start: usize) -> Result<Self> {
        let horizon = self.horizon() - start;
        let shape = self.shape.with_horizon(horizon)?;
        Self::new(shape, self.dynamics[start..].to_vec(), self.costs[start..].to_vec())
    }

    /// Roll a feedback strategy through the game's own affine dynamics.
    pub fn rollout(&self, strategy: &FeedbackStrategy, x1: &Vector) -> Result<Trajectory> {
        if x1.len() != self.shape.n() {
            return Err(GameError::Shape(format!("initial state has length {}, expected {}", x1.len(), self.shape.n())));
        }
        let mut states = Vec::with_capacity(self.horizon());
        let mut controls = Vec::with_capacity(self.horizon() - 1);
        states.push(x1.clone());
        for (t, stage) in self.dynamics.iter().enumerate() {
            let u = strategy.control(t, &states[t]);
            let next = stage.apply(&states[t], &u);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(GameError::Divergence { stage: t + 1 });
            }
            controls.push(u);
            states.push(next);
        }
        Ok(Trajectory { states, controls })
    }

    /// Player cost of a trajectory under this game's quadratic costs.
    pub fn player_cost(&self, traj: &Trajectory, player: usize) -> f64 {
        let last = self.horizon() - 1;
        let running: f64 = traj
            .controls
            .iter()
            .enumerate()
            .map(|(t, u)| self.costs[t][player].value(&traj.states[t], u))
            .sum();
        running + self.costs[last][player].terminal_value(&traj.states[last])
    }
}
