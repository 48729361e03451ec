//! Feedback Nash equilibria of affine LQ games by backward coupled-Riccati
//! recursion.
//!
//! At each stage the players' first-order conditions are stacked into one
//! `m x m` linear system
//!
//! ```text
//! [R^{11} + B1'Z1 B1   B1'Z1 B2   ...] [P^1]   [S^1_1 + B1'Z1 A]
//! [B2'Z2 B1   R^{22} + B2'Z2 B2   ...] [P^2] = [S^2_2 + B2'Z2 A]
//! ```
//!
//! solved once for the gains and once (same matrix) for the feedforward.

use crate::error::{GameError, Result};
use crate::game::{AffineLQGame, FeedbackStrategy, GameShape, Trajectory};
use crate::linalg::{condition_estimate, max_abs, min_eigenvalue, symmetrize, Matrix, Vector};

/// Eigenvalue floor for each player's own control Hessian `R^{ii}`.
pub const CONTROL_HESSIAN_FLOOR: f64 = 1e-9;
/// Condition number above which the stacked stage matrix gets a ridge.
pub const STAGE_CONDITION_LIMIT: f64 = 1e12;
/// Ridge size relative to the stacked matrix's largest entry.
pub const STAGE_RIDGE: f64 = 1e-9;

/// The linear system solved at one stage, kept for differentiation.
#[derive(Debug, Clone)]
pub struct StageSystem {
    /// Stacked matrix including any ridge.
    pub matrix: Matrix,
    /// `R` per player after the `R^{ii}` eigenvalue shift.
    pub control_costs: Vec<Matrix>,
    pub condition: f64,
    pub ridge: f64,
}

/// Equilibrium strategy plus the quadratic value functions
/// `V_t^i(x) = 1/2 x'Z x + zeta'x + offset`.
#[derive(Debug, Clone)]
pub struct FbneSolution {
    pub strategy: FeedbackStrategy,
    /// `[t][player]`, `t = 0..T`.
    pub value_hessians: Vec<Vec<Matrix>>,
    pub value_gradients: Vec<Vec<Vector>>,
    pub value_offsets: Vec<Vec<f64>>,
    pub stages: Vec<StageSystem>,
    /// Whether any `R^{ii}` shift or stage ridge was applied.
    pub regularized: bool,
}

impl FbneSolution {
    pub fn gain(&self, shape: &GameShape, t: usize, player: usize) -> Matrix {
        self.strategy.player_gain(shape, t, player)
    }
}

/// `R` with player `player`'s diagonal block lifted to the eigenvalue floor.
pub(crate) fn regularized_control_cost(shape: &GameShape, r: &Matrix, player: usize) -> (Matrix, bool) {
    let range = shape.control_range(player);
    let block = r.view((range.start, range.start), (range.len(), range.len())).into_owned();
    let lowest = min_eigenvalue(&block);
    if lowest < CONTROL_HESSIAN_FLOOR {
        let mut out = r.clone();
        for k in range {
            out[(k, k)] += CONTROL_HESSIAN_FLOOR - lowest;
        }
        (out, true)
    } else {
        (r.clone(), false)
    }
}

pub fn solve_fbne_lq(game: &AffineLQGame) -> Result<FbneSolution> {
    let shape = game.shape();
    let (n, m, players) = (shape.n(), shape.m(), shape.num_players());
    let horizon = game.horizon();
    let last = horizon - 1;

    let mut z: Vec<Vec<Matrix>> = vec![Vec::new(); horizon];
    let mut zeta: Vec<Vec<Vector>> = vec![Vec::new(); horizon];
    let mut offset: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    for i in 0..players {
        let c = game.cost(last, i);
        z[last].push(c.q.clone());
        zeta[last].push(c.q_lin.clone());
        offset[last].push(c.constant);
    }

    let mut gains = vec![Matrix::zeros(m, n); horizon - 1];
    let mut feedforward = vec![Vector::zeros(m); horizon - 1];
    let mut stages: Vec<Option<StageSystem>> = vec![None; horizon - 1];
    let mut regularized = false;

    for t in (0..horizon - 1).rev() {
        let dynamics = &game.dynamics()[t];
        let (a, b, c) = (&dynamics.a, &dynamics.b, &dynamics.c);

        let mut matrix = Matrix::zeros(m, m);
        let mut rhs_gain = Matrix::zeros(m, n);
        let mut rhs_ff = Vector::zeros(m);
        let mut control_costs = Vec::with_capacity(players);
        for i in 0..players {
            let cost = game.cost(t, i);
            let (r, shifted) = regularized_control_cost(shape, &cost.r, i);
            regularized |= shifted;
            let rows = shape.control_range(i);
            let bi = b.columns(rows.start, rows.len());
            let zi = &z[t + 1][i];
            let bz = bi.transpose() * zi;
            matrix.rows_mut(rows.start, rows.len()).copy_from(&(r.rows(rows.start, rows.len()) + &bz * b));
            rhs_gain
                .rows_mut(rows.start, rows.len())
                .copy_from(&(cost.s.rows(rows.start, rows.len()) + &bz * a));
            rhs_ff
                .rows_mut(rows.start, rows.len())
                .copy_from(&(cost.r_lin.rows(rows.start, rows.len()) + bz * c + bi.transpose() * &zeta[t + 1][i]));
            control_costs.push(r);
        }

        let mut condition = condition_estimate(&matrix);
        let mut ridge = 0.0;
        if !(condition <= STAGE_CONDITION_LIMIT) {
            ridge = STAGE_RIDGE * max_abs(&matrix);
            for k in 0..m {
                matrix[(k, k)] += ridge;
            }
            regularized = true;
            condition = condition_estimate(&matrix);
        }
        let lu = matrix.clone().lu();
        let p = lu.solve(&rhs_gain);
        let alpha = lu.solve(&rhs_ff);
        let (p, alpha) = match (p, alpha) {
            (Some(p), Some(alpha)) if p.iter().chain(alpha.iter()).all(|v| v.is_finite()) => (p, alpha),
            _ => return Err(GameError::EquilibriumExistence { stage: t, condition }),
        };

        let closed = a - b * &p;
        let drift = c - b * &alpha;
        for i in 0..players {
            let cost = game.cost(t, i);
            let r = &control_costs[i];
            let zn = &z[t + 1][i];
            let zetan = &zeta[t + 1][i];
            let pt = p.transpose();
            let st = cost.s.transpose();
            let mut zi = &cost.q + &pt * r * &p - &pt * &cost.s - &st * &p + closed.transpose() * zn * &closed;
            symmetrize(&mut zi);
            let zetai = &cost.q_lin + &pt * r * &alpha - &pt * &cost.r_lin - &st * &alpha
                + closed.transpose() * (zn * &drift + zetan);
            let off = offset[t + 1][i] + cost.constant + 0.5 * alpha.dot(&(r * &alpha)) - cost.r_lin.dot(&alpha)
                + 0.5 * drift.dot(&(zn * &drift))
                + zetan.dot(&drift);
            z[t].push(zi);
            zeta[t].push(zetai);
            offset[t].push(off);
        }
        gains[t] = p;
        feedforward[t] = alpha;
        stages[t] = Some(StageSystem { matrix, control_costs, condition, ridge });
    }

    Ok(FbneSolution {
        strategy: FeedbackStrategy { gains, feedforward },
        value_hessians: z,
        value_gradients: zeta,
        value_offsets: offset,
        stages: stages.into_iter().map(|s| s.expect("every stage solved")).collect(),
        regularized,
    })
}

/// FBNE strategy rolled out on the game's own affine dynamics.
pub fn fbne_trajectory_lq(game: &AffineLQGame, x1: &Vector) -> Result<Trajectory> {
    let solution = solve_fbne_lq(game)?;
    game.rollout(&solution.strategy, x1)
}

/// Largest violation of the per-player stage stationarity conditions,
/// `max |(R^{ii} + Bi'Z Bi) P^i + Bi'Z sum_{j != i} Bj P^j - S^i_i - Bi'Z A|`
/// (and the feedforward analogue).
pub fn stage_stationarity_residual(game: &AffineLQGame, solution: &FbneSolution) -> f64 {
    let shape = game.shape();
    let mut worst: f64 = 0.0;
    for t in 0..game.horizon() - 1 {
        let d = &game.dynamics()[t];
        let p = &solution.strategy.gains[t];
        let alpha = &solution.strategy.feedforward[t];
        for i in 0..shape.num_players() {
            let rows = shape.control_range(i);
            let bi = d.b.columns(rows.start, rows.len());
            let zi = &solution.value_hessians[t + 1][i];
            let r = &solution.stages[t].control_costs[i];
            let cost = game.cost(t, i);
            let lhs = r.rows(rows.start, rows.len()) * p + bi.transpose() * zi * &d.b * p;
            let rhs = cost.s.rows(rows.start, rows.len()) + bi.transpose() * zi * &d.a;
            worst = worst.max((lhs - rhs).amax());
            let lhs_ff = r.rows(rows.start, rows.len()) * alpha + bi.transpose() * zi * &d.b * alpha;
            let rhs_ff = cost.r_lin.rows(rows.start, rows.len())
                + bi.transpose() * (zi * &d.c + &solution.value_gradients[t + 1][i]);
            worst = worst.max((lhs_ff - rhs_ff).amax());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{QuadraticCost, StageDynamics};

    fn scalar_lqr(horizon: usize) -> AffineLQGame {
        let shape = GameShape::uniform(1, horizon, 1, 1).unwrap();
        let one = Matrix::identity(1, 1);
        let dynamics = vec![StageDynamics::linear(one.clone(), one.clone()); horizon - 1];
        let costs = vec![vec![QuadraticCost::pure(one.clone(), one.clone())]; horizon];
        AffineLQGame::new(shape, dynamics, costs).unwrap()
    }

    #[test]
    fn one_step_lqr_gain_is_one_half() {
        let sol = solve_fbne_lq(&scalar_lqr(2)).unwrap();
        assert!((sol.strategy.gains[0][(0, 0)] - 0.5).abs() < 1e-15);
        assert!(!sol.regularized);
    }

    #[test]
    fn value_offsets_reproduce_player_cost() {
        let mut game = scalar_lqr(4);
        let mut costs = game.costs().to_vec();
        costs[1][0].q_lin[0] = 0.3;
        costs[2][0].r_lin[0] = -0.2;
        costs[0][0].constant = 1.5;
        game = game.with_costs(costs).unwrap();
        let sol = solve_fbne_lq(&game).unwrap();
        let x1 = Vector::from_element(1, 0.7);
        let traj = game.rollout(&sol.strategy, &x1).unwrap();
        let predicted = 0.5 * x1.dot(&(&sol.value_hessians[0][0] * &x1))
            + sol.value_gradients[0][0].dot(&x1)
            + sol.value_offsets[0][0];
        assert!((predicted - game.player_cost(&traj, 0)).abs() < 1e-12);
        assert!(stage_stationarity_residual(&game, &sol) < 1e-12);
    }

    #[test]
    fn zero_control_cost_gets_regularized() {
        let shape = GameShape::uniform(1, 2, 1, 1).unwrap();
        let one = Matrix::identity(1, 1);
        let dynamics = vec![StageDynamics::linear(one.clone(), one.clone())];
        let costs = vec![
            vec![QuadraticCost::pure(one.clone(), Matrix::zeros(1, 1))],
            vec![QuadraticCost::pure(one.clone(), Matrix::zeros(1, 1))],
        ];
        let game = AffineLQGame::new(shape, dynamics, costs).unwrap();
        let sol = solve_fbne_lq(&game).unwrap();
        assert!(sol.regularized);
        assert!(sol.strategy.gains[0][(0, 0)].is_finite());
    }

    #[test]
    fn singular_stage_reports_stage_index() {
        // R + B'ZB = 1 - 1 = 0 at the last stage, and a zero matrix gets a
        // zero ridge.
        let shape = GameShape::uniform(1, 3, 1, 1).unwrap();
        let one = Matrix::identity(1, 1);
        let dynamics = vec![StageDynamics::linear(one.clone(), one.clone()); 2];
        let c = QuadraticCost::pure(-one.clone(), one);
        let costs = vec![vec![c.clone()], vec![c.clone()], vec![c]];
        let game = AffineLQGame::new(shape, dynamics, costs).unwrap();
        match solve_fbne_lq(&game) {
            Err(GameError::EquilibriumExistence { stage, .. }) => assert_eq!(stage, 1),
            other => panic!("expected an existence error, got {other:?}"),
        }
    }
}
