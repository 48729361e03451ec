//! Local LQ model of a nonlinear game about a trajectory.

use crate::error::{GameError, Result};
use crate::game::{AffineLQGame, BasisDecomposition, Dynamics, ParamCost, QuadraticCost, StageDynamics, StageTerm, Trajectory};
use crate::linalg::{project_psd, symmetrize, Vector};

/// Default eigenvalue floor for projected term Hessians.
pub const PSD_FLOOR: f64 = 1e-6;

fn finite_all<'a>(mut it: impl Iterator<Item = &'a f64>) -> bool {
    it.all(|v| v.is_finite())
}

/// Second-order model of one term about `(x0, u0)`, Hessian projected onto
/// the PSD cone. With `terminal`, only the state block is kept.
fn quadraticize(term: &dyn StageTerm, x0: &Vector, u0: &Vector, floor: f64, terminal: bool) -> Option<QuadraticCost> {
    let (n, m) = (x0.len(), u0.len());
    let value = term.value(x0, u0);
    let grad = term.gradient(x0, u0);
    let mut hess = term.hessian(x0, u0);
    if !value.is_finite() || !finite_all(grad.iter()) || !finite_all(hess.iter()) {
        return None;
    }
    let mut out = QuadraticCost::zeros(n, m);
    if terminal {
        let mut hxx = hess.view((0, 0), (n, n)).into_owned();
        symmetrize(&mut hxx);
        if !term.convex() {
            project_psd(&mut hxx, floor);
        }
        let gx = grad.rows(0, n).into_owned();
        let hx0 = &hxx * x0;
        out.q_lin = &gx - &hx0;
        out.constant = value - gx.dot(x0) + 0.5 * x0.dot(&hx0);
        out.q = hxx;
        return Some(out);
    }
    symmetrize(&mut hess);
    if !term.convex() {
        project_psd(&mut hess, floor);
    }
    let mut z0 = Vector::zeros(n + m);
    z0.rows_mut(0, n).copy_from(x0);
    z0.rows_mut(n, m).copy_from(u0);
    let hz0 = &hess * &z0;
    let lin = &grad - &hz0;
    out.constant = value - grad.dot(&z0) + 0.5 * z0.dot(&hz0);
    out.q = hess.view((0, 0), (n, n)).into_owned();
    out.r = hess.view((n, n), (m, m)).into_owned();
    out.s = hess.view((n, 0), (m, n)).into_owned();
    out.q_lin = lin.rows(0, n).into_owned();
    out.r_lin = lin.rows(n, m).into_owned();
    Some(out)
}

/// Jacobian linearization of the dynamics and per-basis quadraticization of
/// the costs along `traj`, assembled at `theta`.
///
/// Dynamics stage `t` is `A x + B u + c` with `c = f(x_t, u_t) - A x_t - B u_t`.
/// Every basis and fixed term gets its own projected quadratic block, so the
/// returned game carries a per-basis decomposition.
pub fn linearize_quadraticize(
    dynamics: &dyn Dynamics,
    cost: &ParamCost,
    theta: &[f64],
    traj: &Trajectory,
    psd_floor: f64,
) -> Result<AffineLQGame> {
    let shape = cost.shape();
    if dynamics.shape() != shape {
        return Err(GameError::Shape("dynamics and cost shapes differ".into()));
    }
    traj.check_shape(shape)?;
    cost.check_theta(theta)?;
    let (n, m, players) = (shape.n(), shape.m(), shape.num_players());
    let horizon = shape.horizon();

    let mut stages = Vec::with_capacity(horizon - 1);
    for t in 0..horizon - 1 {
        let (x, u) = (&traj.states[t], &traj.controls[t]);
        let (a, b) = dynamics.jacobians(t, x, u);
        let f = dynamics.step(t, x, u);
        let c = &f - &a * x - &b * u;
        if !finite_all(a.iter().chain(b.iter()).chain(c.iter())) {
            return Err(GameError::Evaluation { stage: t });
        }
        stages.push(StageDynamics { a, b, c });
    }

    let zero_u = Vector::zeros(m);
    let mut fixed = Vec::with_capacity(horizon);
    let mut bases = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let terminal = t == horizon - 1;
        let x = &traj.states[t];
        let u = if terminal { &zero_u } else { &traj.controls[t] };
        let mut fixed_t = Vec::with_capacity(players);
        let mut bases_t = Vec::with_capacity(players);
        for i in 0..players {
            let mut total = QuadraticCost::zeros(n, m);
            for term in cost.fixed(i) {
                let block = quadraticize(term.as_ref(), x, u, psd_floor, terminal).ok_or(GameError::Evaluation { stage: t })?;
                total.add_scaled(&block, 1.0);
            }
            fixed_t.push(total);
            let player_bases = cost
                .bases(i)
                .iter()
                .map(|term| quadraticize(term.as_ref(), x, u, psd_floor, terminal).ok_or(GameError::Evaluation { stage: t }))
                .collect::<Result<Vec<_>>>()?;
            bases_t.push(player_bases);
        }
        fixed.push(fixed_t);
        bases.push(bases_t);
    }
    AffineLQGame::from_basis(shape.clone(), stages, BasisDecomposition { fixed, bases }, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::LogDistance;
    use crate::linalg::Matrix;

    #[test]
    fn log_barrier_hessian_is_clamped() {
        let term = LogDistance { first: [0, 1], second: [2, 3], weight: 0.5 };
        let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let u = Vector::zeros(1);
        let block = quadraticize(&term, &x, &u, PSD_FLOOR, false).unwrap();
        let eig = block.q.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&e| e >= -1e-12));
        assert!(eig.iter().any(|&e| (e - PSD_FLOOR).abs() < 1e-12));
        // gradient of the local model at the expansion point is the true gradient
        let grad = &block.q * &x + &block.q_lin;
        assert!((grad[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_terms_are_reproduced() {
        let h = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let term = crate::game::QuadraticForm::new(h.clone(), Vector::from_vec(vec![1.0, -1.0, 2.0]), 0.7);
        let x = Vector::from_vec(vec![0.3, -0.2]);
        let u = Vector::from_vec(vec![1.5]);
        let block = quadraticize(&term, &x, &u, PSD_FLOOR, false).unwrap();
        let (xp, up) = (Vector::from_vec(vec![-1.0, 2.0]), Vector::from_vec(vec![0.4]));
        assert!((block.value(&xp, &up) - term.value(&xp, &up)).abs() < 1e-12);
    }
}
