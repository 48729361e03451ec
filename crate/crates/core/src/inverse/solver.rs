//! Alternating line-searched gradient descent on the initial state and the
//! cost parameters, each step preceded by a fresh forward solve.

use crate::error::Result;
use crate::inverse::gradient::{approx_grad_theta, approx_grad_theta_open_loop, approx_grad_x1, approx_grad_x1_open_loop};
use crate::inverse::loss::{eval_with, ForwardSolve};
use crate::inverse::problem::{ForwardModel, InverseOptions, InverseProblem, InverseReport, LossValue, StepKind, StepRecord};
use crate::linalg::Vector;

struct Accepted {
    step: f64,
    point: Vector,
    loss: LossValue,
    forward: ForwardSolve,
}

/// Backtracking search along `-g` with the Armijo condition
/// `L(x - eta g) <= L(x) - c eta |g|^2`.
fn line_search(
    x: &Vector,
    g: &Vector,
    loss0: f64,
    first_step: f64,
    opts: &InverseOptions,
    eval: impl Fn(&Vector) -> (LossValue, Option<ForwardSolve>),
) -> Option<Accepted> {
    let gg = g.norm_squared();
    if !(gg > 0.0) || !gg.is_finite() {
        return None;
    }
    let mut step = first_step;
    for _ in 0..=opts.max_backtracks {
        let point = x - g * step;
        let (loss, forward) = eval(&point);
        if let Some(forward) = forward {
            if loss.loss <= loss0 - opts.armijo * step * gg {
                return Some(Accepted { step, point, loss, forward });
            }
        }
        step *= opts.shrink;
    }
    None
}

fn grad_x1(model: ForwardModel, problem: &InverseProblem, f: &ForwardSolve, theta: &[f64], x1: &Vector) -> Result<Vector> {
    match model {
        ForwardModel::Feedback => approx_grad_x1(&f.approximation, theta, x1, &problem.observations),
        ForwardModel::OpenLoopSurrogate => approx_grad_x1_open_loop(&f.approximation, theta, x1, &problem.observations),
    }
}

fn grad_theta(model: ForwardModel, problem: &InverseProblem, f: &ForwardSolve, theta: &[f64], x1: &Vector) -> Result<Vector> {
    let lambda = problem.regularization;
    match model {
        ForwardModel::Feedback => approx_grad_theta(&f.approximation, theta, x1, &problem.observations, lambda),
        ForwardModel::OpenLoopSurrogate => {
            approx_grad_theta_open_loop(&f.approximation, theta, x1, &problem.observations, lambda)
        }
    }
}

fn coordinate_descent(problem: &InverseProblem, model: ForwardModel) -> Result<InverseReport> {
    problem.validate()?;
    let opts = &problem.options;
    let mut theta = Vector::from_column_slice(&problem.theta0);
    let mut x1 = problem.x1_0.clone();
    let (mut loss, mut forward) = eval_with(problem, model, theta.as_slice(), &x1, None);

    let mut report = InverseReport {
        method: model.label(),
        thetas: vec![theta.as_slice().to_vec()],
        x1s: vec![x1.clone()],
        losses: vec![loss.loss],
        best: 0,
        converged: false,
        accepted_steps: 0,
        line_search_failures: 0,
        steps: Vec::new(),
        predicted: None,
    };

    let mut x1_step = opts.initial_step;
    let mut theta_step = opts.initial_step;
    let next_step = |accepted: f64| (accepted * opts.step_growth).min(opts.max_step);

    for k in 1..=opts.max_iterations {
        let Some(current) = forward.as_ref() else { break };

        let mut x1_moved = false;
        if let Ok(g) = grad_x1(model, problem, current, theta.as_slice(), &x1) {
            let warm = current.trajectory.clone();
            let eval = |cand: &Vector| eval_with(problem, model, theta.as_slice(), cand, Some(&warm));
            if let Some(acc) = line_search(&x1, &g, loss.loss, x1_step, opts, eval) {
                report.steps.push(StepRecord {
                    iteration: k,
                    kind: StepKind::InitialState,
                    step_size: acc.step,
                    loss_before: loss.loss,
                    loss_after: acc.loss.loss,
                });
                x1_step = next_step(acc.step);
                x1 = acc.point;
                loss = acc.loss;
                forward = Some(acc.forward);
                x1_moved = true;
            }
        }
        if !x1_moved {
            report.line_search_failures += 1;
        }

        let current = forward.as_ref().expect("forward solution present");
        let mut theta_change = None;
        if let Ok(g) = grad_theta(model, problem, current, theta.as_slice(), &x1) {
            let warm = current.trajectory.clone();
            let eval = |cand: &Vector| eval_with(problem, model, cand.as_slice(), &x1, Some(&warm));
            if let Some(acc) = line_search(&theta, &g, loss.loss, theta_step, opts, eval) {
                report.steps.push(StepRecord {
                    iteration: k,
                    kind: StepKind::Parameters,
                    step_size: acc.step,
                    loss_before: loss.loss,
                    loss_after: acc.loss.loss,
                });
                theta_step = next_step(acc.step);
                theta_change = Some((&acc.point - &theta).norm());
                theta = acc.point;
                loss = acc.loss;
                forward = Some(acc.forward);
            }
        }
        if theta_change.is_none() {
            report.line_search_failures += 1;
        }
        report.accepted_steps += usize::from(x1_moved) + usize::from(theta_change.is_some());

        report.thetas.push(theta.as_slice().to_vec());
        report.x1s.push(x1.clone());
        report.losses.push(loss.loss);

        if !x1_moved && theta_change.is_none() {
            break;
        }
        if theta_change.is_some_and(|d| d <= opts.tolerance) {
            report.converged = true;
            break;
        }
    }

    report.best = report
        .losses
        .iter()
        .enumerate()
        .fold(0, |best, (k, &l)| if l < report.losses[best] { k } else { best });
    let last = report.losses.len() - 1;
    report.predicted = if report.best == last {
        forward.map(|f| f.trajectory)
    } else {
        eval_with(problem, model, &report.thetas[report.best], &report.x1s[report.best], None).1.map(|f| f.trajectory)
    };
    Ok(report)
}

/// Infer `(theta, x1)` under the feedback Nash model.
pub fn solve_inverse(problem: &InverseProblem) -> Result<InverseReport> {
    coordinate_descent(problem, ForwardModel::Feedback)
}

/// Same descent with the open-loop surrogate forward model; reports are
/// labelled `"OLNE-surrogate"`.
pub fn solve_inverse_olne_baseline(problem: &InverseProblem) -> Result<InverseReport> {
    coordinate_descent(problem, ForwardModel::OpenLoopSurrogate)
}
