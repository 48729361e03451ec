use std::collections::BTreeMap;

use nashgame::experiment::io::{
    read_arm_trajectories, read_generalization_truth, read_observations_csv, read_records, read_trajectory_csv, write_montecarlo,
    TrajectoryKey, EXPERT_FILE, GENERALIZATION_TRUTH_FILE, OBSERVATIONS_FILE, RECORDS_FILE, TRAJECTORIES_FILE,
};
use nashgame::experiment::{
    generate_expert, metric_a, metric_b, metric_c, run_montecarlo, ArmKey, ExperimentConfig, Method,
};
use nashgame::linalg::Vector;

const SMALL_LQ: &str = r#"
seed = 17
output_dir = "unused"

[model]
name = "lq_pursuit"
horizon = 8

[observation]
selection = "full"
sigmas = [0.0, 0.05]
seeds_per_level = 2

[solver]
methods = ["fbne", "olne"]
max_iterations = 200

[generalization]
count = 3
half_width = 0.5
"#;

fn config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL_LQ).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + b.abs())
}

#[test]
fn metrics_recompute_from_dumped_files() {
    let cfg = config();
    let run = run_montecarlo(&cfg, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_montecarlo(&run, dir.path(), false).unwrap();

    let expert = read_trajectory_csv(&dir.path().join(EXPERT_FILE)).unwrap();
    let observations = read_observations_csv(&dir.path().join(OBSERVATIONS_FILE)).unwrap();
    let trajectories = read_arm_trajectories(&dir.path().join(TRAJECTORIES_FILE)).unwrap();
    let truth = read_generalization_truth(&dir.path().join(GENERALIZATION_TRUTH_FILE)).unwrap();
    let records = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 2 * 2 * 2);
    assert_eq!(truth.len(), 3);

    for row in &records {
        assert_eq!(row.config_hash, run.config_hash);
        assert!(row.error.is_empty(), "{}", row.error);
        let arm = ArmKey { sigma_index: row.sigma_index, seed_index: row.seed_index };
        let key = |kind: &str, sample: usize| TrajectoryKey { arm, method: row.method.clone(), kind: kind.into(), sample };
        let predicted = &trajectories[&key("predicted", 0)];
        let generalization: Vec<Vec<Vector>> = (0..3).map(|k| trajectories[&key("generalization", k)].clone()).collect();
        assert!(close(metric_a(&observations[&arm], predicted), row.metric_a), "{row:?}");
        assert!(close(metric_b(predicted, &expert), row.metric_b), "{row:?}");
        assert!(close(metric_c(&generalization, &truth), row.metric_c), "{row:?}");
    }
}

#[test]
fn noiseless_feedback_arm_reproduces_the_expert() {
    let cfg = config();
    let run = run_montecarlo(&cfg, 0).unwrap();
    let norm = run.expert.stacked_states().norm();
    let by_method: BTreeMap<_, _> =
        run.records().filter(|r| r.arm.sigma_index == 0).map(|r| ((r.method, r.arm.seed_index), r)).collect();
    for seed in 0..2 {
        let r = by_method[&(Method::Fbne, seed)];
        assert!(r.metrics.b <= 1e-3 * norm, "seed {seed}: b {} vs norm {norm}", r.metrics.b);
    }
    let summary = run.summary_for(1, Method::Fbne).unwrap();
    assert_eq!((summary.arms, summary.finite), (2, 2));
}

#[test]
fn desk_scale_partial_observations_cover_the_unmasked_stages() {
    let cfg = ExperimentConfig::desk_scale();
    let expert = generate_expert(&cfg, ArmKey { sigma_index: 1, seed_index: 0 }).unwrap();
    assert_eq!(expert.trajectory.horizon(), 40);
    assert_eq!(expert.observations.len(), 31);
    let again = generate_expert(&cfg, ArmKey { sigma_index: 1, seed_index: 0 }).unwrap();
    assert_eq!(expert.observations.measurements, again.observations.measurements);
    let other = generate_expert(&cfg, ArmKey { sigma_index: 1, seed_index: 1 }).unwrap();
    assert_ne!(expert.observations.measurements, other.observations.measurements);
}
