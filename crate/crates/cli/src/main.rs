use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nashgame::experiment::io::{write_observations_csv, write_trajectory_csv};
use nashgame::experiment::{
    compare_info_patterns, expert_trajectory, observe_arm, run_montecarlo, verify_prop1, write_comparison_csv, ArmKey,
    ExperimentConfig, Method, Metrics, OUTPUT_DIR_ENV,
};
use nashgame::game::Trajectory;
use nashgame::ilq::{ilq_olne_solve, ilqgames_solve};
use nashgame::inverse::{solve_inverse, solve_inverse_olne_baseline, InverseProblem, InverseReport};
use nashgame::linalg::Vector;
use nashgame::zoo::PursuitVariant;
use nashgame::GameError;

#[derive(Parser)]
#[command(name = "nashgame", version, about = "Forward and inverse Nash solvers for dynamic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured game under its true parameters and dump the trajectory.
    Forward(ForwardArgs),
    /// Run one inverse solve on a single noisy observation set.
    Inverse(InverseArgs),
    /// Run the Monte Carlo study over the configured noise grid.
    Montecarlo(MonteCarloArgs),
    /// Check the non-identifiable parameter pair of the scalar game.
    Prop1(Prop1Args),
    /// Dump FBNE and OLNE trajectories of the pursuit games side by side.
    CompareInfoPatterns(PatternArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fbne,
    Olne,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fbne => Method::Fbne,
            MethodArg::Olne => Method::Olne,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the environment and the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForwardArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "fbne")]
    method: MethodArg,
}

#[derive(Args)]
struct InverseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "fbne")]
    method: MethodArg,
    /// Index into the configured noise levels.
    #[arg(long, default_value_t = 0)]
    sigma_index: usize,
    /// Replication index at that noise level.
    #[arg(long, default_value_t = 0)]
    seed_index: usize,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    common: Common,
    /// Run only this method instead of the configured ones.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write per-arm wall times to timings.csv.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct Prop1Args {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PatternArgs {
    /// `lq_pursuit`, `lq_pursuit_ghat`, `lq_pursuit_ghhat` or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    /// Initial state as four comma-separated numbers.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [1.0, -0.5, -1.0, 1.0])]
    x1: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        let (code, kind) = match &e {
            GameError::Config(_) => (2, "config"),
            GameError::UnknownModel(_) => (2, "unknown_model"),
            GameError::Shape(_) => (2, "shape"),
            GameError::Domain(_) => (2, "domain"),
            GameError::Io(_) => (1, "io"),
            GameError::Divergence { .. } => (1, "divergence"),
            GameError::Evaluation { .. } => (1, "evaluation"),
            GameError::EquilibriumExistence { .. } => (1, "equilibrium"),
            GameError::NotConverged(_) => (1, "not_converged"),
        };
        Failure { code, kind, message: e.to_string() }
    }
}

type CliResult = Result<Value, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": message.trim() }));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Forward(a) => forward(a),
        Command::Inverse(a) => inverse(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Prop1(a) => prop1(a),
        Command::CompareInfoPatterns(a) => patterns(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.resolved_output_dir());
    std::fs::create_dir_all(&out).map_err(GameError::from)?;
    Ok((config, out))
}

fn default_out() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn forward(args: ForwardArgs) -> CliResult {
    let (config, out) = load(&args.common)?;
    let resolved = config.resolve()?;
    let model = &resolved.model;
    let fwd = config.solver.forward_options();
    let (trajectory, iterations, converged) = match Method::from(args.method) {
        Method::Fbne => {
            let r = ilqgames_solve(model.dynamics.as_ref(), &model.cost, &resolved.theta_true, &resolved.x1_true, None, &fwd)?;
            (r.trajectory, r.iterations, r.converged)
        }
        Method::Olne => {
            let r = ilq_olne_solve(model.dynamics.as_ref(), &model.cost, &resolved.theta_true, &resolved.x1_true, None, &fwd)?;
            (r.trajectory, r.iterations, r.converged)
        }
    };
    let path = out.join("forward_trajectory.csv");
    write_trajectory_csv(&path, &trajectory)?;
    Ok(json!({
        "command": "forward",
        "method": Method::from(args.method).record_label(),
        "iterations": iterations,
        "converged": converged,
        "trajectory": path_str(&path),
    }))
}

fn write_iterates(path: &Path, report: &InverseReport) -> Result<(), GameError> {
    let p = report.thetas[0].len();
    let n = report.x1s[0].len();
    let mut text = String::from("iteration,loss");
    (0..p).for_each(|j| text.push_str(&format!(",theta_{j}")));
    (0..n).for_each(|k| text.push_str(&format!(",x1_{k}")));
    text.push('\n');
    for (k, ((theta, x1), loss)) in report.thetas.iter().zip(&report.x1s).zip(&report.losses).enumerate() {
        text.push_str(&format!("{k},{loss}"));
        theta.iter().chain(x1.iter()).for_each(|v| text.push_str(&format!(",{v}")));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn inverse(args: InverseArgs) -> CliResult {
    let (config, out) = load(&args.common)?;
    let resolved = config.resolve()?;
    let model = &resolved.model;
    let expert = expert_trajectory(&config, &resolved)?;
    let arm = ArmKey { sigma_index: args.sigma_index, seed_index: args.seed_index };
    let observations = observe_arm(&config, &resolved, &expert, arm)?;

    let mut problem =
        InverseProblem::new(model.dynamics.clone(), model.cost.clone(), observations.clone(), &model.nominal_state);
    problem.theta0 = resolved.theta0.clone();
    problem.regularization = config.solver.regularization;
    problem.options = config.solver.inverse_options();
    problem.forward = config.solver.forward_options();
    let method = Method::from(args.method);
    let report = match method {
        Method::Fbne => solve_inverse(&problem)?,
        Method::Olne => solve_inverse_olne_baseline(&problem)?,
    };
    let predicted: Trajectory =
        ilqgames_solve(model.dynamics.as_ref(), &model.cost, report.theta(), report.x1(), None, &problem.forward)?.trajectory;
    let metrics = Metrics::compute(&observations, &predicted.states, &expert.states, &[], &[]);

    write_trajectory_csv(&out.join("expert_trajectory.csv"), &expert)?;
    write_observations_csv(&out.join("observations.csv"), &[(arm, observations)])?;
    write_trajectory_csv(&out.join("predicted_trajectory.csv"), &predicted)?;
    write_iterates(&out.join("inverse_iterates.csv"), &report)?;
    Ok(json!({
        "command": "inverse",
        "method": method.record_label(),
        "config_hash": config.hash(),
        "theta": report.theta(),
        "x1": report.x1().iter().collect::<Vec<_>>(),
        "loss": report.loss(),
        "iterations": report.iterations(),
        "converged": report.converged,
        "metric_a": metrics.a,
        "metric_b": metrics.b,
        "out": path_str(&out),
    }))
}

fn montecarlo(args: MonteCarloArgs) -> CliResult {
    let (mut config, out) = load(&args.common)?;
    if let Some(m) = args.method {
        config.solver.methods = vec![m.into()];
    }
    let run = run_montecarlo(&config, args.workers)?;
    let files = nashgame::experiment::io::write_montecarlo(&run, &out, args.timings)?;
    let failed = run.records().filter(|r| r.error.is_some()).count();
    let summary: Vec<Value> = run
        .summary
        .iter()
        .map(|s| {
            json!({
                "sigma": s.sigma,
                "method": s.method.record_label(),
                "metric_a": s.a.mean,
                "metric_b": s.b.mean,
                "metric_c": s.c.mean,
            })
        })
        .collect();
    Ok(json!({
        "command": "montecarlo",
        "config_hash": run.config_hash,
        "arms": run.arms.len(),
        "failed_arms": failed,
        "summary": summary,
        "files": files.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
    }))
}

fn prop1(args: Prop1Args) -> CliResult {
    let report = verify_prop1(args.samples, args.seed)?;
    let body = json!({
        "command": "prop1",
        "samples": report.samples,
        "passed": report.passed(),
        "max_pair_gap": report.max_pair_gap,
        "max_oracle_gap": report.max_oracle_gap,
        "max_gain_error": report.max_gain_error,
        "off_pair_gap": report.off_pair_gap,
        "failures": report.failures,
    });
    if report.passed() {
        Ok(body)
    } else {
        Err(Failure { code: 1, kind: "prop1_mismatch", message: body.to_string() })
    }
}

fn patterns(args: PatternArgs) -> CliResult {
    let variants: Vec<PursuitVariant> = if args.model == "all" {
        PursuitVariant::ALL.to_vec()
    } else {
        vec![args.model.parse().map_err(|e: GameError| Failure { code: 2, kind: "unknown_model", message: e.to_string() })?]
    };
    if args.horizon < 2 {
        return Err(GameError::Config("horizon must be at least 2".into()).into());
    }
    let x1 = Vector::from_vec(args.x1);
    let comparisons =
        variants.iter().map(|&v| compare_info_patterns(v, args.horizon, &x1)).collect::<Result<Vec<_>, _>>()?;
    let out = args.out.unwrap_or_else(default_out);
    let path = out.join("info_patterns.csv");
    write_comparison_csv(&path, &comparisons)?;
    let gaps: Vec<Value> =
        comparisons.iter().map(|c| json!({ "model": c.variant.model_name(), "relative_gap": c.relative_gap })).collect();
    Ok(json!({ "command": "compare-info-patterns", "gaps": gaps, "csv": path_str(&path) }))
}
