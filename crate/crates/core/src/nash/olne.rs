//! Open-loop Nash equilibria of affine LQ games from the joint first-order
//! (Pontryagin) conditions, solved as one banded linear system.
//!
//! Unknowns are grouped per transition `t`: `[u_t | lambda_{t+1}^1..N | x_{t+1}]`,
//! and each group's equations (control stationarity, costate recursion,
//! dynamics) are stored in the same order, which keeps the matrix banded.

use crate::error::{GameError, Result};
use crate::game::{AffineLQGame, GameShape, QuadraticCost, StageDynamics, Trajectory};
use crate::linalg::{BandLu, BandMatrix, Matrix, Vector};
use crate::nash::fbne::regularized_control_cost;

/// Open-loop controls plus the costates that certify them.
#[derive(Debug, Clone)]
pub struct OpenLoopPlan {
    pub controls: Vec<Vector>,
    /// `[t][player]` for `t = 0..T`; the last entry is the terminal-cost
    /// gradient.
    pub costates: Vec<Vec<Vector>>,
}

#[derive(Debug, Clone)]
pub struct OlneSolution {
    pub plan: OpenLoopPlan,
    pub trajectory: Trajectory,
    /// Max-norm residual of the assembled KKT rows at the solution.
    pub kkt_residual: f64,
}

/// Index bookkeeping for the stacked unknown vector.
#[derive(Debug, Clone)]
pub struct KktLayout {
    n: usize,
    m: usize,
    players: usize,
    transitions: usize,
}

impl KktLayout {
    pub fn new(shape: &GameShape) -> Self {
        Self { n: shape.n(), m: shape.m(), players: shape.num_players(), transitions: shape.horizon() - 1 }
    }

    fn block(&self) -> usize {
        self.m + self.players * self.n + self.n
    }

    pub fn dim(&self) -> usize {
        self.block() * self.transitions
    }

    /// Offset of `u_t`.
    pub fn control(&self, t: usize) -> usize {
        t * self.block()
    }

    /// Offset of `lambda_{t+1}^i`.
    pub fn costate(&self, t: usize, player: usize) -> usize {
        t * self.block() + self.m + player * self.n
    }

    /// Offset of `x_{t+1}`.
    pub fn state(&self, t: usize) -> usize {
        t * self.block() + self.m + self.players * self.n
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn push_block(trips: &mut Triplets, row: usize, col: usize, block: &Matrix, scale: f64) {
    for i in 0..block.nrows() {
        for j in 0..block.ncols() {
            let v = block[(i, j)];
            if v != 0.0 {
                trips.push((row + i, col + j, scale * v));
            }
        }
    }
}

/// Entries contributed by cost blocks `[t][player]` (any subset of them may be
/// zero). Control-stationarity rows get `R u + S x + r`, costate rows get
/// `Q x + q + S'u`; terms that involve the fixed initial state move to the
/// right-hand side.
pub(crate) fn push_cost_entries(
    layout: &KktLayout,
    shape: &GameShape,
    costs: &[Vec<QuadraticCost>],
    x1: &Vector,
    trips: &mut Triplets,
    rhs: &mut Vector,
) {
    let n = layout.n;
    let last = layout.transitions;
    for t in 0..layout.transitions {
        for i in 0..layout.players {
            let rows = shape.control_range(i);
            let row = layout.control(t) + rows.start;
            let cost = &costs[t][i];
            let r_rows = cost.r.rows(rows.start, rows.len()).into_owned();
            push_block(trips, row, layout.control(t), &r_rows, 1.0);
            let s_rows = cost.s.rows(rows.start, rows.len()).into_owned();
            if t == 0 {
                let moved = &s_rows * x1;
                for k in 0..rows.len() {
                    rhs[row + k] -= moved[k];
                }
            } else {
                push_block(trips, row, layout.state(t - 1), &s_rows, 1.0);
            }
            for k in 0..rows.len() {
                rhs[row + k] -= cost.r_lin[rows.start + k];
            }

            // costate row for lambda_{t+1}^i: stationarity in x_{t+1}
            let s = t + 1;
            let row = layout.costate(t, i);
            let cs = &costs[s][i];
            push_block(trips, row, layout.state(t), &cs.q, 1.0);
            for k in 0..n {
                rhs[row + k] -= cs.q_lin[k];
            }
            if s < last {
                push_block(trips, row, layout.control(s), &cs.s.transpose(), 1.0);
            }
        }
    }
}

fn push_dynamics_entries(
    layout: &KktLayout,
    shape: &GameShape,
    dynamics: &[StageDynamics],
    x1: &Vector,
    trips: &mut Triplets,
    rhs: &mut Vector,
) {
    let n = layout.n;
    let last = layout.transitions;
    for (t, d) in dynamics.iter().enumerate() {
        for i in 0..layout.players {
            let rows = shape.control_range(i);
            let bi_t = d.b.columns(rows.start, rows.len()).transpose();
            push_block(trips, layout.control(t) + rows.start, layout.costate(t, i), &bi_t, 1.0);

            let row = layout.costate(t, i);
            push_block(trips, row, row, &Matrix::identity(n, n), -1.0);
            let s = t + 1;
            if s < last {
                push_block(trips, row, layout.costate(s, i), &dynamics[s].a.transpose(), 1.0);
            }
        }
        let row = layout.state(t);
        push_block(trips, row, row, &Matrix::identity(n, n), 1.0);
        push_block(trips, row, layout.control(t), &d.b, -1.0);
        if t == 0 {
            let moved = &d.a * x1;
            for k in 0..n {
                rhs[row + k] += moved[k];
            }
        } else {
            push_block(trips, row, layout.state(t - 1), &d.a, -1.0);
        }
        for k in 0..n {
            rhs[row + k] += d.c[k];
        }
    }
}

/// Cost blocks with each player's `R^{ii}` lifted to the eigenvalue floor.
fn regularized_costs(game: &AffineLQGame) -> Vec<Vec<QuadraticCost>> {
    let shape = game.shape();
    game.costs()
        .iter()
        .map(|stage| {
            stage
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mut c = c.clone();
                    c.r = regularized_control_cost(shape, &c.r, i).0;
                    c
                })
                .collect()
        })
        .collect()
}

/// Assembled and factorised KKT system for one game and initial state.
#[derive(Debug, Clone)]
pub struct OlneKkt {
    pub layout: KktLayout,
    band: BandMatrix,
    lu: BandLu,
    pub rhs: Vector,
}

impl OlneKkt {
    pub fn assemble(game: &AffineLQGame, x1: &Vector) -> Result<Self> {
        let shape = game.shape();
        if x1.len() != shape.n() {
            return Err(GameError::Shape(format!("initial state has length {}, expected {}", x1.len(), shape.n())));
        }
        let layout = KktLayout::new(shape);
        let mut trips = Vec::new();
        let mut rhs = Vector::zeros(layout.dim());
        push_cost_entries(&layout, shape, &regularized_costs(game), x1, &mut trips, &mut rhs);
        push_dynamics_entries(&layout, shape, game.dynamics(), x1, &mut trips, &mut rhs);
        let band = BandMatrix::from_triplets(layout.dim(), &trips);
        let lu = band.clone().factor().map_err(|_| GameError::EquilibriumExistence {
            stage: 0,
            condition: f64::INFINITY,
        })?;
        Ok(Self { layout, band, lu, rhs })
    }

    /// Right-hand side for the same game at another initial state.
    pub fn rhs_for(game: &AffineLQGame, x1: &Vector) -> Vector {
        let shape = game.shape();
        let layout = KktLayout::new(shape);
        let mut trips = Vec::new();
        let mut rhs = Vector::zeros(layout.dim());
        push_cost_entries(&layout, shape, &regularized_costs(game), x1, &mut trips, &mut rhs);
        push_dynamics_entries(&layout, shape, game.dynamics(), x1, &mut trips, &mut rhs);
        rhs
    }

    pub fn solve(&self, rhs: &Vector) -> Vector {
        let mut z = self.lu.solve(rhs);
        // one step of iterative refinement
        let r = rhs - self.band.mul_vec(&z);
        z += self.lu.solve(&r);
        z
    }

    pub fn residual(&self, z: &Vector) -> f64 {
        (self.band.mul_vec(z) - &self.rhs).amax()
    }
}

/// Apply the cost-dependent part of the KKT operator for `costs` at `z`:
/// the sensitivity of the KKT residual to those cost blocks.
pub(crate) fn cost_operator(shape: &GameShape, costs: &[Vec<QuadraticCost>], z: &Vector, x1: &Vector) -> Vector {
    let layout = KktLayout::new(shape);
    let mut trips = Vec::new();
    let mut rhs = Vector::zeros(layout.dim());
    push_cost_entries(&layout, shape, costs, x1, &mut trips, &mut rhs);
    let mut out = -rhs;
    for (i, j, v) in trips {
        out[i] += v * z[j];
    }
    out
}

/// Unpack a KKT solution into trajectory and costates.
pub(crate) fn unpack(game: &AffineLQGame, layout: &KktLayout, z: &Vector, x1: &Vector) -> (Trajectory, Vec<Vec<Vector>>) {
    let shape = game.shape();
    let (n, m, players) = (shape.n(), shape.m(), shape.num_players());
    let horizon = game.horizon();
    let mut states = vec![x1.clone()];
    let mut controls = Vec::with_capacity(horizon - 1);
    let mut costates = vec![Vec::new(); horizon];
    for t in 0..horizon - 1 {
        controls.push(z.rows(layout.control(t), m).into_owned());
        states.push(z.rows(layout.state(t), n).into_owned());
        for i in 0..players {
            costates[t + 1].push(z.rows(layout.costate(t, i), n).into_owned());
        }
    }
    // lambda_1 for diagnostics
    for i in 0..players {
        let c = game.cost(0, i);
        let l = &c.q * x1 + &c.q_lin + c.s.transpose() * &controls[0] + game.dynamics()[0].a.transpose() * &costates[1][i];
        costates[0].push(l);
    }
    (Trajectory { states, controls }, costates)
}

pub fn solve_olne_lq(game: &AffineLQGame, x1: &Vector) -> Result<OlneSolution> {
    let kkt = OlneKkt::assemble(game, x1)?;
    let z = kkt.solve(&kkt.rhs);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(GameError::EquilibriumExistence { stage: 0, condition: f64::INFINITY });
    }
    let kkt_residual = kkt.residual(&z);
    let (trajectory, costates) = unpack(game, &kkt.layout, &z, x1);
    Ok(OlneSolution {
        plan: OpenLoopPlan { controls: trajectory.controls.clone(), costates },
        trajectory,
        kkt_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::fbne_trajectory_lq;

    fn scalar_lqr(horizon: usize) -> AffineLQGame {
        let shape = GameShape::uniform(1, horizon, 1, 1).unwrap();
        let one = Matrix::identity(1, 1);
        let dynamics = vec![StageDynamics::linear(one.clone(), one.clone()); horizon - 1];
        let costs = vec![vec![QuadraticCost::pure(one.clone(), one.clone())]; horizon];
        AffineLQGame::new(shape, dynamics, costs).unwrap()
    }

    #[test]
    fn single_player_one_step_plan() {
        let sol = solve_olne_lq(&scalar_lqr(2), &Vector::from_element(1, 1.0)).unwrap();
        assert!((sol.plan.controls[0][0] + 0.5).abs() < 1e-14);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn single_player_plan_matches_feedback_rollout() {
        let game = scalar_lqr(7);
        let x1 = Vector::from_element(1, -2.3);
        let ol = solve_olne_lq(&game, &x1).unwrap();
        let fb = fbne_trajectory_lq(&game, &x1).unwrap();
        for (a, b) in ol.trajectory.controls.iter().zip(&fb.controls) {
            assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let game = scalar_lqr(5);
        let sol = solve_olne_lq(&game, &Vector::zeros(1)).unwrap();
        assert!(sol.trajectory.states.iter().chain(&sol.trajectory.controls).all(|v| v.amax() == 0.0));
    }

    #[test]
    fn terminal_costate_is_terminal_gradient() {
        let game = scalar_lqr(4);
        let sol = solve_olne_lq(&game, &Vector::from_element(1, 1.0)).unwrap();
        let x_t = sol.trajectory.states.last().unwrap();
        assert!((&sol.plan.costates[3][0] - x_t).amax() < 1e-12);
    }
}
