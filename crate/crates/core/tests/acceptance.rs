//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 5 12`.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{max_abs_diff, randv, random_game, rng, simulate};
use nashgame::experiment::io::write_montecarlo;
use nashgame::experiment::{run_montecarlo, verify_prop1, ExperimentConfig, Method, Selection, SelectionPreset, SolverConfig};
use nashgame::game::{apply_observation, relative_state_error, AffineLQGame, ObservationModel, Trajectory};
use nashgame::ilq::{ilqgames_solve, IlqOptions};
use nashgame::inverse::{approx_grad_theta, approx_grad_x1, eval_loss, solve_inverse, InverseProblem, InverseReport};
use nashgame::linalg::{Matrix, Vector};
use nashgame::nash::{fbne_trajectory_lq, prop1_oracle, solve_fbne_lq, solve_olne_lq, FbneSolution};
use nashgame::zoo::{build_lq_pursuit, build_model, build_prop1, ModelParams, PursuitVariant, ZooModel};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn model(name: &str) -> ZooModel {
    build_model(name, &ModelParams::default()).expect("registered model")
}

fn forward(m: &ZooModel, theta: &[f64], x1: &Vector) -> Trajectory {
    ilqgames_solve(m.dynamics.as_ref(), &m.cost, theta, x1, None, &IlqOptions::default()).expect("forward solve").trajectory
}

fn monotone(report: &InverseReport) -> bool {
    report.steps.iter().all(|s| s.loss_after <= s.loss_before)
}

// 1. Non-identifiable pair of the scalar game.
fn prop1_equivalence() -> Outcome {
    let start = Instant::now();
    let report = verify_prop1(100, 2024).map_err(|e| e.to_string())?;
    let gains = |q1, q2| solve_fbne_lq(&build_prop1(q1, q2).unwrap()).unwrap().strategy.gains[1].clone();
    let (g1, g2) = (gains(1.0, 1.0), gains(0.5, 2.0));
    let gain_err = (g1[(0, 0)] - 0.4)
        .abs()
        .max((g1[(1, 0)] - 0.2).abs())
        .max((g2[(0, 0)] - 0.2).abs())
        .max((g2[(1, 0)] - 0.4).abs());
    let elapsed = start.elapsed();
    check(
        report.max_pair_gap <= 1e-10 && gain_err <= 1e-12 && report.passed() && elapsed < Duration::from_secs(1),
        format!("pair gap {:.1e}, gain error {gain_err:.1e}, {elapsed:.2?}", report.max_pair_gap),
    )
}

// 2. General solver against the closed form on a weight grid.
fn oracle_equivalence() -> Outcome {
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for &q1 in &grid {
        for &q2 in &grid {
            let game = build_prop1(q1, q2).unwrap();
            for _ in 0..10 {
                let x1 = r.random_range(-10.0..=10.0);
                let traj = fbne_trajectory_lq(&game, &Vector::from_element(1, x1)).map_err(|e| e.to_string())?;
                let (x2, x3) = prop1_oracle(q1, q2, x1).unwrap();
                worst = worst.max((traj.states[1][0] - x2).abs()).max((traj.states[2][0] - x3).abs());
            }
        }
    }
    check(worst <= 1e-10, format!("max gap {worst:.1e} over 25 weight pairs"))
}

fn lqr_gains(game: &AffineLQGame) -> Vec<Matrix> {
    let horizon = game.horizon();
    let mut v = game.cost(horizon - 1, 0).q.clone();
    let mut out = vec![Matrix::zeros(0, 0); horizon - 1];
    for t in (0..horizon - 1).rev() {
        let d = &game.dynamics()[t];
        let c = game.cost(t, 0);
        let huu = &c.r + d.b.transpose() * &v * &d.b;
        let hux = &c.s + d.b.transpose() * &v * &d.a;
        let p = huu.try_inverse().unwrap() * &hux;
        v = &c.q + d.a.transpose() * &v * &d.a - hux.transpose() * &p;
        v = (&v + v.transpose()) * 0.5;
        out[t] = p;
    }
    out
}

// 3. One player: FBNE is LQR and OLNE agrees with it.
fn one_player_reduction() -> Outcome {
    let mut r = rng(3);
    let (mut gain_err, mut control_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let n = r.random_range(1..=3);
        let horizon = r.random_range(2..=10);
        let m = r.random_range(1..=2);
        let game = random_game(&mut r, horizon, n, &[m], true);
        let sol = solve_fbne_lq(&game).map_err(|e| e.to_string())?;
        for (t, p) in lqr_gains(&game).iter().enumerate() {
            gain_err = gain_err.max(max_abs_diff(&sol.strategy.gains[t], p) / (1.0 + p.amax()));
        }
        let x1 = randv(&mut r, n);
        let fb = game.rollout(&sol.strategy, &x1).unwrap();
        let ol = solve_olne_lq(&game, &x1).map_err(|e| e.to_string())?.trajectory;
        for (a, b) in fb.controls.iter().zip(&ol.controls) {
            control_err = control_err.max((a - b).amax());
        }
    }
    check(gain_err <= 1e-12 && control_err <= 1e-10, format!("gain error {gain_err:.1e}, control error {control_err:.1e}"))
}

fn cost_to_go(game: &AffineLQGame, sol: &FbneSolution, t: usize, x: &Vector, player: usize, du: &Vector) -> f64 {
    let mut state = x.clone();
    let mut total = 0.0;
    for s in t..game.horizon() - 1 {
        let mut u = sol.strategy.control(s, &state);
        if s == t {
            u += du;
        }
        total += game.cost(s, player).value(&state, &u);
        state = game.dynamics()[s].apply(&state, &u);
    }
    total + game.cost(game.horizon() - 1, player).terminal_value(&state)
}

// 4. No profitable unilateral deviation; open-loop stationarity.
fn nash_deviation() -> Outcome {
    let mut r = rng(4);
    let (mut best_gain, mut worst_derivative): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..20 {
        let n = r.random_range(1..=2);
        let horizon = r.random_range(2..=4);
        let game = random_game(&mut r, horizon, n, &[1, 1], true);
        let shape = game.shape().clone();
        let sol = solve_fbne_lq(&game).map_err(|e| e.to_string())?;
        for t in 0..horizon - 1 {
            let x = randv(&mut r, n);
            for player in 0..2 {
                let base = cost_to_go(&game, &sol, t, &x, player, &Vector::zeros(shape.m()));
                for k in shape.control_range(player) {
                    for sign in [-1.0, 1.0] {
                        let mut du = Vector::zeros(shape.m());
                        du[k] = sign * 1e-3;
                        best_gain = best_gain.max(base - cost_to_go(&game, &sol, t, &x, player, &du));
                    }
                }
            }
        }
        let x1 = randv(&mut r, n);
        let plan = solve_olne_lq(&game, &x1).map_err(|e| e.to_string())?.trajectory.controls;
        for player in 0..2 {
            let range = shape.control_range(player);
            let dir: Vec<Vector> =
                plan.iter().map(|u| Vector::from_fn(u.len(), |k, _| if range.contains(&k) { r.random_range(-1.0..1.0) } else { 0.0 })).collect();
            let cost = |s: f64| {
                let controls: Vec<Vector> = plan.iter().zip(&dir).map(|(u, d)| u + d * s).collect();
                game.player_cost(&simulate(&game, &x1, &controls), player)
            };
            worst_derivative = worst_derivative.max(((cost(1e-4) - cost(-1e-4)) / 2e-4).abs());
        }
    }
    check(
        best_gain <= 1e-9 && worst_derivative <= 1e-6,
        format!("best deviation gain {best_gain:.1e}, open-loop derivative {worst_derivative:.1e}"),
    )
}

// 5. Feedback and open-loop equilibria differ on the pursuit games.
fn separation() -> Outcome {
    let x1 = Vector::from_vec(vec![1.0, -0.5, -1.0, 1.0]);
    let mut gaps = Vec::new();
    for v in PursuitVariant::ALL {
        let game = build_lq_pursuit(v, 10).map_err(|e| e.to_string())?;
        let fb = fbne_trajectory_lq(&game, &x1).map_err(|e| e.to_string())?;
        let ol = solve_olne_lq(&game, &x1).map_err(|e| e.to_string())?.trajectory;
        gaps.push(relative_state_error(&ol, &fb));
    }
    check(gaps.iter().all(|&g| g > 1e-3), format!("relative gaps {:?}", gaps.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>()))
}

// 6. Frozen-linearization gradients against central differences.
fn gradient_fidelity() -> Outcome {
    let mut r = rng(6);
    let names = ["lq_pursuit", "lq_pursuit_ghat", "lq_pursuit_ghhat", "prop1"];
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let m = model(names[k % names.len()]);
        let shape = &m.descriptor.shape;
        let expert = forward(&m, &m.theta, &m.x1);
        let obs = apply_observation(&expert, &ObservationModel::full(shape.n(), shape.horizon(), 0.05), k as u64).unwrap();
        let mut problem = InverseProblem::new(m.dynamics.clone(), m.cost.clone(), obs, &m.nominal_state);
        problem.regularization = 1e-2;
        let theta: Vec<f64> = (0..m.theta.len()).map(|_| r.random_range(0.5..2.0)).collect();
        let x1 = Vector::from_fn(shape.n(), |_, _| r.random_range(-1.0..1.0));
        let frozen = eval_loss(&problem, &theta, &x1).1.ok_or("forward solve failed")?.approximation;
        let gt = approx_grad_theta(&frozen, &theta, &x1, &problem.observations, problem.regularization).map_err(|e| e.to_string())?;
        let gx = approx_grad_x1(&frozen, &theta, &x1, &problem.observations).map_err(|e| e.to_string())?;
        let fd_t = Vector::from_fn(theta.len(), |j, _| {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let at = |s: f64| {
                let mut p = theta.clone();
                p[j] += s;
                eval_loss(&problem, &p, &x1).0.loss
            };
            (at(h) - at(-h)) / (2.0 * h)
        });
        let fd_x = Vector::from_fn(x1.len(), |j, _| {
            let h = 1e-5 * x1[j].abs().max(1.0);
            let at = |s: f64| {
                let mut p = x1.clone();
                p[j] += s;
                eval_loss(&problem, &theta, &p).0.loss
            };
            (at(h) - at(-h)) / (2.0 * h)
        });
        worst = worst.max((&gt - &fd_t).norm() / fd_t.norm()).max((&gx - &fd_x).norm() / fd_x.norm());
    }
    check(worst <= 1e-5, format!("max relative error {worst:.1e} over 20 points"))
}

// 7. Iterative LQ convergence on the two-vehicle game.
fn forward_convergence() -> Outcome {
    let m = model("dubins2");
    let start = Instant::now();
    let result = ilqgames_solve(m.dynamics.as_ref(), &m.cost, &m.theta, &m.x1, None, &IlqOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let last = result.residuals.last().copied().unwrap_or(f64::NAN);
    check(
        result.converged && result.iterations <= 100 && last <= 1e-6 && elapsed < Duration::from_secs(30),
        format!("{} iterations, last step {last:.1e}, {elapsed:.2?}", result.iterations),
    )
}

// 8. Noiseless, fully observed recovery on the two-vehicle game.
fn noiseless_recovery() -> Outcome {
    let m = model("dubins2");
    let shape = &m.descriptor.shape;
    let expert = forward(&m, &m.theta, &m.x1);
    let obs = apply_observation(&expert, &ObservationModel::full(shape.n(), shape.horizon(), 0.0), 0).unwrap();
    let problem = InverseProblem::new(m.dynamics.clone(), m.cost.clone(), obs, &m.nominal_state);
    let start = Instant::now();
    let report = solve_inverse(&problem).map_err(|e| e.to_string())?;
    let predicted = report.predicted.as_ref().ok_or("no predicted trajectory")?;
    let rel = relative_state_error(predicted, &expert);
    check(
        rel <= 1e-3 && monotone(&report),
        format!(
            "relative error {rel:.2e}, theta {:?}, K = {}, monotone {}, {:.1?}",
            report.theta().iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            problem.options.max_iterations,
            monotone(&report),
            start.elapsed()
        ),
    )
}

// 9. Desk-scale Monte Carlo ordering.
fn montecarlo_ordering() -> Outcome {
    let config = ExperimentConfig::desk_scale();
    let start = Instant::now();
    let run = run_montecarlo(&config, 0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let sigmas = config.observation.sigmas.len();
    let stat = |s: usize, m: Method| run.summary_for(s, m).expect("summary row");
    let b: Vec<f64> = (0..sigmas).map(|s| stat(s, Method::Fbne).b.mean).collect();
    let nondecreasing = b.windows(2).all(|w| w[0] <= w[1]);
    let ordered = (0..sigmas).all(|s| {
        let (f, o) = (stat(s, Method::Fbne), stat(s, Method::Olne));
        f.b.mean <= o.b.mean && f.c.mean <= o.c.mean
    });
    let failed = run.records().filter(|r| r.error.is_some()).count();
    let olne_b: Vec<f64> = (0..sigmas).map(|s| stat(s, Method::Olne).b.mean).collect();
    let c: Vec<(f64, f64)> = (0..sigmas).map(|s| (stat(s, Method::Fbne).c.mean, stat(s, Method::Olne).c.mean)).collect();
    check(
        nondecreasing && ordered && failed == 0 && elapsed <= Duration::from_secs(20 * 60),
        format!("fbne b {b:.4?}, olne b {olne_b:.4?}, (fbne, olne) c {c:.4?}, {failed} failed arms, {elapsed:.0?}"),
    )
}

// 10. Three vehicles with the nonconvex proximity cost.
fn nonconvex_handling() -> Outcome {
    let m = model("dubins3");
    let shape = &m.descriptor.shape;
    let expert = forward(&m, &m.theta, &m.x1);
    let times = ObservationModel::times_with_gap(shape.horizon(), 10..=18);
    let obs_model = ObservationModel::new(m.partial_selection.clone(), times, 0.0);
    let obs = apply_observation(&expert, &obs_model, 0).unwrap();
    let mut problem = InverseProblem::new(m.dynamics.clone(), m.cost.clone(), obs, &m.nominal_state);
    problem.regularization = 1e-4;
    let start = Instant::now();
    let report = solve_inverse(&problem).map_err(|e| format!("solver error: {e}"))?;
    let predicted = report.predicted.as_ref().ok_or("no predicted trajectory")?;
    let rel = relative_state_error(predicted, &expert);
    check(
        rel <= 5e-2,
        format!(
            "relative error {rel:.2e}, theta {:?}, {:.1?}",
            report.theta().iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            start.elapsed()
        ),
    )
}

// 11. Random restarts on the scalar game land on both minima; a ridge
// penalty shifts them toward the smaller-norm one. The loss is nearly flat
// along 2 Q1 + Q2 = 3, so first-order descent needs a large budget.
const RESTART_BUDGET: usize = 20_000;

fn non_identifiability() -> Outcome {
    let m = model("prop1");
    let expert = forward(&m, &m.theta, &m.x1);
    let obs = apply_observation(&expert, &ObservationModel::full(1, 3, 0.0), 0).unwrap();
    let minima = [[1.0, 1.0], [0.5, 2.0]];
    let nearest = |theta: &[f64]| {
        let d = |p: &[f64; 2]| ((theta[0] - p[0]).powi(2) + (theta[1] - p[1]).powi(2)).sqrt();
        usize::from(d(&minima[1]) < d(&minima[0]))
    };
    let mut r = rng(11);
    let starts: Vec<Vec<f64>> = (0..50).map(|_| vec![r.random_range(0.1..3.0), r.random_range(0.1..3.0)]).collect();
    let solve = |lambda: f64| -> Result<Vec<InverseReport>, String> {
        starts
            .iter()
            .map(|theta0| {
                let mut p = InverseProblem::new(m.dynamics.clone(), m.cost.clone(), obs.clone(), &m.nominal_state);
                p.theta0 = theta0.clone();
                p.regularization = lambda;
                p.options.max_iterations = RESTART_BUDGET;
                solve_inverse(&p).map_err(|e| e.to_string())
            })
            .collect()
    };
    let start = Instant::now();
    let plain = solve(0.0)?;
    let ridge = solve(0.1)?;
    let worst_loss = plain.iter().map(|r| r.loss()).fold(0.0, f64::max);
    let thetas: Vec<&[f64]> = plain.iter().map(|r| r.theta()).collect();
    let spread = thetas
        .iter()
        .flat_map(|a| thetas.iter().map(move |b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()))
        .fold(0.0, f64::max);
    let counts = |reports: &[InverseReport]| {
        let near_small = reports.iter().filter(|r| nearest(r.theta()) == 0).count();
        (near_small, reports.len() - near_small)
    };
    let (plain_small, plain_large) = counts(&plain);
    let (ridge_small, _) = counts(&ridge);
    let elapsed = start.elapsed();
    check(
        worst_loss <= 1e-8 && plain_small > 0 && plain_large > 0 && spread > 0.1 && ridge_small > plain_small,
        format!(
            "worst loss {worst_loss:.1e}, lambda 0: {plain_small} near (1,1) / {plain_large} near (1/2,2), spread {spread:.2}; lambda 0.1: {ridge_small} near (1,1); K = {RESTART_BUDGET}, {elapsed:.0?}"
        ),
    )
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

// 12. Byte-identical output for any worker count.
fn determinism() -> Outcome {
    let mut config = ExperimentConfig::desk_scale();
    config.seed = 12;
    config.observation.sigmas = vec![0.01, 0.03];
    config.observation.seeds_per_level = 2;
    config.observation.selection = Selection::Preset(SelectionPreset::Partial);
    config.solver = SolverConfig { max_iterations: 15, ..SolverConfig::default() };
    config.generalization.count = 3;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (k, workers) in [1, 3, 1].into_iter().enumerate() {
        let run = run_montecarlo(&config, workers).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("run{k}"));
        write_montecarlo(&run, &out, false).map_err(|e| e.to_string())?;
        outputs.push(csv_bytes(&out));
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        identical && outputs[0].len() == 7,
        format!("{} CSV files compared across 3 runs (workers 1, 3, 1), identical: {identical}", outputs[0].len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("scalar-game equivalence", prop1_equivalence),
        ("oracle equivalence", oracle_equivalence),
        ("one-player reduction", one_player_reduction),
        ("Nash deviation property", nash_deviation),
        ("FBNE/OLNE separation", separation),
        ("gradient fidelity", gradient_fidelity),
        ("forward convergence", forward_convergence),
        ("noiseless recovery", noiseless_recovery),
        ("desk-scale Monte Carlo ordering", montecarlo_ordering),
        ("nonconvex-cost handling", nonconvex_handling),
        ("non-identifiability witness", non_identifiability),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
