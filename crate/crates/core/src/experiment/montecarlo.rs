use std::time::Instant;

use rayon::prelude::*;

use crate::error::{GameError, Result};
use crate::experiment::config::{ExperimentConfig, Method, ResolvedExperiment};
use crate::experiment::expert::{expert_trajectory, generalization_starts, observe_arm, ArmKey};
use crate::experiment::metrics::Metrics;
use crate::game::{ObservationSet, Trajectory};
use crate::ilq::ilqgames_solve;
use crate::inverse::{solve_inverse, solve_inverse_olne_baseline, InverseProblem, InverseReport};
use crate::linalg::Vector;

/// Outcome of one `(sigma, seed, method)` arm.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRecord {
    pub config_hash: String,
    pub arm: ArmKey,
    pub sigma: f64,
    pub method: Method,
    pub metrics: Metrics,
    /// The inverse solver met its parameter tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub line_search_failures: usize,
    pub final_loss: f64,
    pub theta: Vec<f64>,
    pub x1: Vec<f64>,
    /// Set when the arm failed; metrics are then NaN.
    pub error: Option<String>,
    pub wall_seconds: f64,
}

/// Record plus the trajectories its metrics were computed from.
#[derive(Debug, Clone)]
pub struct ArmOutput {
    pub record: MonteCarloRecord,
    /// FBNE trajectory under the inferred `(theta, x1)`.
    pub predicted: Option<Trajectory>,
    /// FBNE trajectories under the inferred `theta` from each unseen start.
    pub generalization: Vec<Trajectory>,
}

/// Per `(sigma, method)` aggregate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sigma_index: usize,
    pub sigma: f64,
    pub method: Method,
    pub arms: usize,
    /// Arms with finite metrics; statistics are over these.
    pub finite: usize,
    pub converged: usize,
    pub mean_final_loss: f64,
    pub a: Stats,
    pub b: Stats,
    pub c: Stats,
}

/// Mean with both spreads: sample standard deviation over `sqrt(n)` and
/// sample variance over `sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
    pub variance_over_sqrt_n: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stats { mean: f64::NAN, std_dev: f64::NAN, std_error: f64::NAN, variance_over_sqrt_n: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stats { mean, std_dev: var.sqrt(), std_error: var.sqrt() / n.sqrt(), variance_over_sqrt_n: var / n.sqrt() }
    }
}

/// Everything a Monte Carlo run produced, ordered by `(sigma, seed, method)`.
#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub expert: Trajectory,
    pub observations: Vec<(ArmKey, ObservationSet)>,
    pub generalization_starts: Vec<Vector>,
    pub generalization_truth: Vec<Trajectory>,
    pub arms: Vec<ArmOutput>,
    pub summary: Vec<SummaryRow>,
}

impl MonteCarloRun {
    pub fn records(&self) -> impl Iterator<Item = &MonteCarloRecord> {
        self.arms.iter().map(|a| &a.record)
    }

    pub fn summary_for(&self, sigma_index: usize, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.sigma_index == sigma_index && s.method == method)
    }
}

/// Shared, read-only state of a run.
struct Context<'a> {
    config: &'a ExperimentConfig,
    resolved: ResolvedExperiment,
    hash: String,
    expert: Trajectory,
    starts: Vec<Vector>,
    truth_generalization: Vec<Vec<Vector>>,
}

/// Run every arm of the noise grid for every configured method on a pool of
/// `workers` threads (`0` uses rayon's default). Output order and content do
/// not depend on `workers`.
pub fn run_montecarlo(config: &ExperimentConfig, workers: usize) -> Result<MonteCarloRun> {
    config.validate()?;
    let resolved = config.resolve()?;
    let expert = expert_trajectory(config, &resolved)?;
    let starts = generalization_starts(config, &resolved);
    let model = &resolved.model;
    let forward = config.solver.forward_options();
    let generalization_truth = starts
        .iter()
        .map(|x| {
            ilqgames_solve(model.dynamics.as_ref(), &model.cost, &resolved.theta_true, x, None, &forward).map(|r| r.trajectory)
        })
        .collect::<Result<Vec<_>>>()?;

    let keys: Vec<ArmKey> = (0..config.observation.sigmas.len())
        .flat_map(|s| (0..config.observation.seeds_per_level).map(move |k| ArmKey { sigma_index: s, seed_index: k }))
        .collect();
    let observations = keys
        .iter()
        .map(|&arm| observe_arm(config, &resolved, &expert, arm).map(|o| (arm, o)))
        .collect::<Result<Vec<_>>>()?;

    let ctx = Context {
        config,
        hash: config.hash(),
        truth_generalization: generalization_truth.iter().map(|t| t.states.clone()).collect(),
        resolved,
        expert,
        starts,
    };
    let mut methods = config.solver.methods.clone();
    methods.sort();
    methods.dedup();
    let jobs: Vec<(usize, Method)> =
        (0..observations.len()).flat_map(|i| methods.iter().map(move |&m| (i, m))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GameError::Config(format!("cannot start worker pool: {e}")))?;
    let arms: Vec<ArmOutput> =
        pool.install(|| jobs.par_iter().map(|&(i, m)| run_arm(&ctx, observations[i].0, &observations[i].1, m)).collect());

    let summary = summarize(config, &methods, &arms);
    Ok(MonteCarloRun {
        config: config.clone(),
        config_hash: ctx.hash,
        expert: ctx.expert,
        observations,
        generalization_starts: ctx.starts,
        generalization_truth,
        arms,
        summary,
    })
}

fn run_arm(ctx: &Context<'_>, arm: ArmKey, observations: &ObservationSet, method: Method) -> ArmOutput {
    let start = Instant::now();
    let sigma = ctx.config.observation.sigmas[arm.sigma_index];
    let mut record = MonteCarloRecord {
        config_hash: ctx.hash.clone(),
        arm,
        sigma,
        method,
        metrics: Metrics::NAN,
        converged: false,
        iterations: 0,
        accepted_steps: 0,
        line_search_failures: 0,
        final_loss: f64::NAN,
        theta: Vec::new(),
        x1: Vec::new(),
        error: None,
        wall_seconds: 0.0,
    };
    let mut output = ArmOutput { record: record.clone(), predicted: None, generalization: Vec::new() };
    match evaluate_arm(ctx, observations, method) {
        Ok((report, predicted, generalization)) => {
            record.converged = report.converged;
            record.iterations = report.iterations();
            record.accepted_steps = report.accepted_steps;
            record.line_search_failures = report.line_search_failures;
            record.final_loss = report.loss();
            record.theta = report.theta().to_vec();
            record.x1 = report.x1().iter().copied().collect();
            let inferred: Vec<Vec<Vector>> = generalization.iter().map(|t| t.states.clone()).collect();
            record.metrics =
                Metrics::compute(observations, &predicted.states, &ctx.expert.states, &inferred, &ctx.truth_generalization);
            output.predicted = Some(predicted);
            output.generalization = generalization;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record.wall_seconds = start.elapsed().as_secs_f64();
    output.record = record;
    output
}

type ArmSolution = (InverseReport, Trajectory, Vec<Trajectory>);

fn evaluate_arm(ctx: &Context<'_>, observations: &ObservationSet, method: Method) -> Result<ArmSolution> {
    let model = &ctx.resolved.model;
    let solver = &ctx.config.solver;
    let mut problem =
        InverseProblem::new(model.dynamics.clone(), model.cost.clone(), observations.clone(), &model.nominal_state);
    problem.theta0 = ctx.resolved.theta0.clone();
    problem.regularization = solver.regularization;
    problem.options = solver.inverse_options();
    problem.forward = solver.forward_options();
    let report = match method {
        Method::Fbne => solve_inverse(&problem)?,
        Method::Olne => solve_inverse_olne_baseline(&problem)?,
    };
    let forward = |x: &Vector| {
        ilqgames_solve(model.dynamics.as_ref(), &model.cost, report.theta(), x, None, &problem.forward).map(|r| r.trajectory)
    };
    let predicted = forward(report.x1())?;
    let generalization = ctx.starts.iter().map(forward).collect::<Result<Vec<_>>>()?;
    Ok((report, predicted, generalization))
}

fn summarize(config: &ExperimentConfig, methods: &[Method], arms: &[ArmOutput]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (sigma_index, &sigma) in config.observation.sigmas.iter().enumerate() {
        for &method in methods {
            let group: Vec<&MonteCarloRecord> = arms
                .iter()
                .map(|a| &a.record)
                .filter(|r| r.arm.sigma_index == sigma_index && r.method == method)
                .collect();
            let finite: Vec<&&MonteCarloRecord> = group.iter().filter(|r| r.metrics.is_finite()).collect();
            let column = |f: fn(&Metrics) -> f64| Stats::of(&finite.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
            rows.push(SummaryRow {
                sigma_index,
                sigma,
                method,
                arms: group.len(),
                finite: finite.len(),
                converged: group.iter().filter(|r| r.converged).count(),
                mean_final_loss: Stats::of(&finite.iter().map(|r| r.final_loss).collect::<Vec<_>>()).mean,
                a: column(|m| m.a),
                b: column(|m| m.b),
                c: column(|m| m.c),
            });
        }
    }
    rows
}
