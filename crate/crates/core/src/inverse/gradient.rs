//! Gradients of the loss through a frozen local LQ model.
//!
//! The local model's dynamics and per-basis cost blocks are held fixed; only
//! the dependence of its equilibrium trajectory on `theta` (through the
//! assembled costs) and on `x1` is differentiated. On games that are
//! already LQ this is the exact gradient.

use nalgebra::{Dyn, LU};

use crate::error::{GameError, Result};
use crate::game::{AffineLQGame, BasisDecomposition, ObservationSet, QuadraticCost, Trajectory};
use crate::linalg::{symmetrize, Matrix, Vector};
use crate::nash::{cost_operator, solve_fbne_lq, FbneSolution, OlneKkt};

fn decomposition(frozen: &AffineLQGame) -> Result<&BasisDecomposition> {
    frozen.basis().ok_or_else(|| GameError::Domain("frozen model carries no per-basis decomposition".into()))
}

/// `dL/dx_t` of the data term: `-2 H'(y_t - h(x_t))` at observed stages.
fn state_sensitivities(traj: &Trajectory, observations: &ObservationSet) -> Vec<Option<Vector>> {
    let n = traj.states[0].len();
    let mut out = vec![None; traj.horizon()];
    for (t, y) in observations.iter() {
        let residual = y - observations.model.observe(&traj.states[t]);
        let mut g = Vector::zeros(n);
        for (k, &idx) in observations.model.selection.iter().enumerate() {
            g[idx] -= 2.0 * residual[k];
        }
        out[t] = Some(g);
    }
    out
}

/// `(owner, [t] block)` for every parameter, in joint parameter order.
fn basis_blocks(decomp: &BasisDecomposition) -> Vec<(usize, Vec<QuadraticCost>)> {
    let mut out = Vec::new();
    for (i, player_bases) in decomp.bases[0].iter().enumerate() {
        for j in 0..player_bases.len() {
            out.push((i, decomp.bases.iter().map(|stage| stage[i][j].clone()).collect()));
        }
    }
    out
}

struct FrozenFeedback {
    game: AffineLQGame,
    solution: FbneSolution,
    factors: Vec<LU<f64, Dyn, Dyn>>,
    trajectory: Trajectory,
}

impl FrozenFeedback {
    fn new(frozen: &AffineLQGame, theta: &[f64], x1: &Vector) -> Result<Self> {
        let game = frozen.reassemble(theta)?;
        let solution = solve_fbne_lq(&game)?;
        let factors = solution.stages.iter().map(|s| s.matrix.clone().lu()).collect();
        let trajectory = game.rollout(&solution.strategy, x1)?;
        Ok(Self { game, solution, factors, trajectory })
    }

    fn closed_loop(&self, t: usize) -> Matrix {
        let d = &self.game.dynamics()[t];
        &d.a - &d.b * &self.solution.strategy.gains[t]
    }

    /// Forward-mode tangent of `(P_t, alpha_t)` for one basis weight, by
    /// differentiating the backward recursion. Regularization shifts and
    /// ridges are held constant.
    fn strategy_tangent(&self, owner: usize, blocks: &[QuadraticCost]) -> Result<(Vec<Matrix>, Vec<Vector>)> {
        let game = &self.game;
        let shape = game.shape();
        let (n, m, players) = (shape.n(), shape.m(), shape.num_players());
        let horizon = game.horizon();
        let last = horizon - 1;
        let pick = |i: usize, t: usize| (i == owner).then(|| &blocks[t]);

        let mut dz: Vec<Matrix> =
            (0..players).map(|i| pick(i, last).map_or_else(|| Matrix::zeros(n, n), |b| b.q.clone())).collect();
        let mut dzeta: Vec<Vector> =
            (0..players).map(|i| pick(i, last).map_or_else(|| Vector::zeros(n), |b| b.q_lin.clone())).collect();
        let mut d_gain = vec![Matrix::zeros(m, n); horizon - 1];
        let mut d_ff = vec![Vector::zeros(m); horizon - 1];

        for t in (0..last).rev() {
            let dyn_t = &game.dynamics()[t];
            let (a, b, c) = (&dyn_t.a, &dyn_t.b, &dyn_t.c);
            let p = &self.solution.strategy.gains[t];
            let alpha = &self.solution.strategy.feedforward[t];

            let mut dm = Matrix::zeros(m, m);
            let mut dn = Matrix::zeros(m, n);
            let mut dr = Vector::zeros(m);
            for i in 0..players {
                let rows = shape.control_range(i);
                let bi = b.columns(rows.start, rows.len());
                let bz = bi.transpose() * &dz[i];
                let mut m_rows = &bz * b;
                let mut n_rows = &bz * a;
                let mut r_rows = &bz * c + bi.transpose() * &dzeta[i];
                if let Some(blk) = pick(i, t) {
                    m_rows += blk.r.rows(rows.start, rows.len());
                    n_rows += blk.s.rows(rows.start, rows.len());
                    r_rows += blk.r_lin.rows(rows.start, rows.len());
                }
                dm.rows_mut(rows.start, rows.len()).copy_from(&m_rows);
                dn.rows_mut(rows.start, rows.len()).copy_from(&n_rows);
                dr.rows_mut(rows.start, rows.len()).copy_from(&r_rows);
            }
            let lu = &self.factors[t];
            let dp = lu.solve(&(dn - &dm * p)).ok_or(GameError::EquilibriumExistence { stage: t, condition: f64::INFINITY })?;
            let da = lu.solve(&(dr - &dm * alpha)).ok_or(GameError::EquilibriumExistence { stage: t, condition: f64::INFINITY })?;

            let f = a - b * p;
            let beta = c - b * alpha;
            let df = -(b * &dp);
            let dbeta = -(b * &da);
            let (pt, dpt) = (p.transpose(), dp.transpose());
            let mut next_dz = Vec::with_capacity(players);
            let mut next_dzeta = Vec::with_capacity(players);
            for i in 0..players {
                let cost = game.cost(t, i);
                let r = &self.solution.stages[t].control_costs[i];
                let (s, r_lin) = (&cost.s, &cost.r_lin);
                let zn = &self.solution.value_hessians[t + 1][i];
                let zetan = &self.solution.value_gradients[t + 1][i];
                let (dzn, dzetan) = (&dz[i], &dzeta[i]);
                let rp = r * p;
                let mut dzi = &dpt * &rp + rp.transpose() * &dp - &dpt * s - s.transpose() * &dp
                    + df.transpose() * zn * &f
                    + f.transpose() * dzn * &f
                    + f.transpose() * zn * &df;
                let mut dzetai = &dpt * (r * alpha) + &pt * (r * &da) - &dpt * r_lin - s.transpose() * &da
                    + df.transpose() * (zn * &beta + zetan)
                    + f.transpose() * (dzn * &beta + zn * &dbeta + dzetan);
                if let Some(blk) = pick(i, t) {
                    dzi += &blk.q + &pt * &blk.r * p - &pt * &blk.s - blk.s.transpose() * p;
                    dzetai += &blk.q_lin + &pt * (&blk.r * alpha) - &pt * &blk.r_lin - blk.s.transpose() * alpha;
                }
                symmetrize(&mut dzi);
                next_dz.push(dzi);
                next_dzeta.push(dzetai);
            }
            dz = next_dz;
            dzeta = next_dzeta;
            d_gain[t] = dp;
            d_ff[t] = da;
        }
        Ok((d_gain, d_ff))
    }
}

/// `dL/dtheta` through the frozen feedback equilibrium, including the
/// `2 lambda theta` penalty term.
pub fn approx_grad_theta(
    frozen: &AffineLQGame,
    theta: &[f64],
    x1: &Vector,
    observations: &ObservationSet,
    lambda: f64,
) -> Result<Vector> {
    let decomp = decomposition(frozen)?;
    let ff = FrozenFeedback::new(frozen, theta, x1)?;
    let sens = state_sensitivities(&ff.trajectory, observations);
    let n = x1.len();
    let horizon = ff.game.horizon();
    let mut grad = Vector::zeros(theta.len());
    for (j, (owner, blocks)) in basis_blocks(decomp).into_iter().enumerate() {
        let (dp, da) = ff.strategy_tangent(owner, &blocks)?;
        let mut dx = Vector::zeros(n);
        let mut acc = 0.0;
        for t in 0..horizon {
            if let Some(g) = &sens[t] {
                acc += g.dot(&dx);
            }
            if t + 1 < horizon {
                let b = &ff.game.dynamics()[t].b;
                dx = ff.closed_loop(t) * &dx - b * (&dp[t] * &ff.trajectory.states[t] + &da[t]);
            }
        }
        grad[j] = acc + 2.0 * lambda * theta[j];
    }
    Ok(grad)
}

/// `dL/dx1` through the frozen feedback equilibrium: the rollout is affine
/// in `x1`, so this is an adjoint pass over the closed-loop matrices.
pub fn approx_grad_x1(frozen: &AffineLQGame, theta: &[f64], x1: &Vector, observations: &ObservationSet) -> Result<Vector> {
    let ff = FrozenFeedback::new(frozen, theta, x1)?;
    let sens = state_sensitivities(&ff.trajectory, observations);
    let horizon = ff.game.horizon();
    let mut mu = Vector::zeros(x1.len());
    for t in (0..horizon).rev() {
        if t + 1 < horizon {
            mu = ff.closed_loop(t).transpose() * mu;
        }
        if let Some(g) = &sens[t] {
            mu += g;
        }
    }
    Ok(mu)
}

struct FrozenOpenLoop {
    game: AffineLQGame,
    kkt: OlneKkt,
    z: Vector,
    trajectory: Trajectory,
}

impl FrozenOpenLoop {
    fn new(frozen: &AffineLQGame, theta: &[f64], x1: &Vector) -> Result<Self> {
        let game = frozen.reassemble(theta)?;
        let kkt = OlneKkt::assemble(&game, x1)?;
        let z = kkt.solve(&kkt.rhs);
        let (trajectory, _) = crate::nash::unpack(&game, &kkt.layout, &z, x1);
        Ok(Self { game, kkt, z, trajectory })
    }

    /// `sum_t g_t . dx_t` for a tangent `dz` of the stacked unknowns.
    fn contract(&self, sens: &[Option<Vector>], dz: &Vector, dx1: Option<&Vector>) -> f64 {
        let n = self.trajectory.states[0].len();
        let mut acc = 0.0;
        for (t, g) in sens.iter().enumerate() {
            let Some(g) = g else { continue };
            if t == 0 {
                if let Some(d) = dx1 {
                    acc += g.dot(d);
                }
            } else {
                acc += g.dot(&dz.rows(self.kkt.layout.state(t - 1), n));
            }
        }
        acc
    }
}

/// `dL/dtheta` through the frozen model's open-loop equilibrium.
pub fn approx_grad_theta_open_loop(
    frozen: &AffineLQGame,
    theta: &[f64],
    x1: &Vector,
    observations: &ObservationSet,
    lambda: f64,
) -> Result<Vector> {
    let decomp = decomposition(frozen)?;
    let fo = FrozenOpenLoop::new(frozen, theta, x1)?;
    let sens = state_sensitivities(&fo.trajectory, observations);
    let shape = fo.game.shape();
    let (n, m, players) = (shape.n(), shape.m(), shape.num_players());
    let mut grad = Vector::zeros(theta.len());
    for (j, (owner, blocks)) in basis_blocks(decomp).into_iter().enumerate() {
        let costs: Vec<Vec<QuadraticCost>> = blocks
            .iter()
            .map(|blk| (0..players).map(|i| if i == owner { blk.clone() } else { QuadraticCost::zeros(n, m) }).collect())
            .collect();
        let dres = cost_operator(shape, &costs, &fo.z, x1);
        let dz = fo.kkt.solve(&(-dres));
        grad[j] = fo.contract(&sens, &dz, None) + 2.0 * lambda * theta[j];
    }
    Ok(grad)
}

/// `dL/dx1` through the frozen model's open-loop equilibrium.
pub fn approx_grad_x1_open_loop(
    frozen: &AffineLQGame,
    theta: &[f64],
    x1: &Vector,
    observations: &ObservationSet,
) -> Result<Vector> {
    let fo = FrozenOpenLoop::new(frozen, theta, x1)?;
    let sens = state_sensitivities(&fo.trajectory, observations);
    let n = x1.len();
    let base = OlneKkt::rhs_for(&fo.game, &Vector::zeros(n));
    let mut grad = Vector::zeros(n);
    for k in 0..n {
        let e = Vector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 });
        let drhs = OlneKkt::rhs_for(&fo.game, &e) - &base;
        let dz = fo.kkt.solve(&drhs);
        grad[k] = fo.contract(&sens, &dz, Some(&e));
    }
    Ok(grad)
}
