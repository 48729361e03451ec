use crate::error::Result;
use crate::game::{ObservationSet, Trajectory};
use crate::ilq::{ilq_olne_solve, ilqgames_solve, IlqResult};
use crate::inverse::problem::{ForwardModel, InverseProblem, LossValue};
use crate::linalg::Vector;

/// `sum_t |y_t - h(x_t)|^2 + lambda |theta|^2` for a given trajectory.
pub fn loss_of_trajectory(traj: &Trajectory, observations: &ObservationSet, theta: &[f64], lambda: f64) -> LossValue {
    let residuals: Vec<Vector> = observations.iter().map(|(t, y)| y - observations.model.observe(&traj.states[t])).collect();
    let regularization = lambda * theta.iter().map(|v| v * v).sum::<f64>();
    let data: f64 = residuals.iter().map(|r| r.norm_squared()).sum();
    LossValue { loss: data + regularization, residuals, regularization }
}

/// Forward solution under either information pattern.
#[derive(Debug, Clone)]
pub(crate) struct ForwardSolve {
    pub trajectory: Trajectory,
    pub approximation: crate::game::AffineLQGame,
}

pub(crate) fn forward_solve(
    problem: &InverseProblem,
    model: ForwardModel,
    theta: &[f64],
    x1: &Vector,
    warm: Option<&Trajectory>,
) -> Result<ForwardSolve> {
    let dynamics = problem.dynamics.as_ref();
    match model {
        ForwardModel::Feedback => {
            let r = ilqgames_solve(dynamics, &problem.cost, theta, x1, warm, &problem.forward)?;
            Ok(ForwardSolve { trajectory: r.trajectory, approximation: r.approximation })
        }
        ForwardModel::OpenLoopSurrogate => {
            let r = ilq_olne_solve(dynamics, &problem.cost, theta, x1, warm, &problem.forward)?;
            Ok(ForwardSolve { trajectory: r.trajectory, approximation: r.approximation })
        }
    }
}

/// Loss at `(theta, x1)` through a fresh feedback forward solve. A failed
/// forward solve yields an infinite loss and no solver result.
pub fn eval_loss(problem: &InverseProblem, theta: &[f64], x1: &Vector) -> (LossValue, Option<IlqResult>) {
    match ilqgames_solve(problem.dynamics.as_ref(), &problem.cost, theta, x1, None, &problem.forward) {
        Ok(r) => (loss_of_trajectory(&r.trajectory, &problem.observations, theta, problem.regularization), Some(r)),
        Err(_) => (LossValue::failed(), None),
    }
}

pub(crate) fn eval_with(
    problem: &InverseProblem,
    model: ForwardModel,
    theta: &[f64],
    x1: &Vector,
    warm: Option<&Trajectory>,
) -> (LossValue, Option<ForwardSolve>) {
    match forward_solve(problem, model, theta, x1, warm) {
        Ok(f) => (loss_of_trajectory(&f.trajectory, &problem.observations, theta, problem.regularization), Some(f)),
        Err(_) => (LossValue::failed(), None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ObservationModel;

    #[test]
    fn single_residual_arithmetic() {
        let traj = Trajectory::new(vec![Vector::zeros(2), Vector::from_vec(vec![0.0, 1.0])], vec![Vector::zeros(1)]).unwrap();
        let observations = ObservationSet {
            model: ObservationModel::new(vec![1], vec![1], 0.0),
            measurements: vec![Vector::from_element(1, 1.1)],
        };
        let l = loss_of_trajectory(&traj, &observations, &[3.0], 0.0);
        assert!((l.loss - 0.01).abs() < 1e-12);
        let l = loss_of_trajectory(&traj, &observations, &[3.0], 0.5);
        assert!((l.loss - l.data_term() - l.regularization).abs() < 1e-12);
        assert!((l.regularization - 4.5).abs() < 1e-12);
    }
}
