//! Experiment engine: configuration, expert data, Monte Carlo studies,
//! metrics and CSV output.

mod config;
mod expert;
pub mod io;
mod metrics;
mod montecarlo;
mod patterns;
mod prop1_check;
mod rng;

pub use config::{
    ExperimentConfig, GeneralizationConfig, Method, ModelConfig, ObservationConfig, ResolvedExperiment, Selection,
    SelectionPreset, SolverConfig, TruthConfig, OUTPUT_DIR_ENV,
};
pub use expert::{expert_trajectory, generalization_starts, generate_expert, observe_arm, ArmKey, Expert};
pub use metrics::{metric_a, metric_b, metric_c, Metrics};
pub use montecarlo::{run_montecarlo, ArmOutput, MonteCarloRecord, MonteCarloRun, Stats, SummaryRow};
pub use patterns::{compare_info_patterns, write_comparison_csv, InfoPatternComparison};
pub use prop1_check::{verify_prop1, Prop1Report, PROP1_GAIN_TOL, PROP1_TRAJECTORY_TOL};
pub use rng::{arm_stream, generalization_stream, RNG_ALGORITHM};
