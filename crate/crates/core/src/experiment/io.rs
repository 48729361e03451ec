//! CSV schemas. Trajectories are stored long-form as
//! `(…key columns, t, coordinate_index, value)` with zero-based `t`; floats
//! use the shortest representation that parses back to the same value.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::experiment::expert::ArmKey;
use crate::experiment::montecarlo::{MonteCarloRecord, MonteCarloRun};
use crate::experiment::rng::RNG_ALGORITHM;
use crate::game::{ObservationModel, ObservationSet, Trajectory};
use crate::linalg::Vector;

pub const METADATA_FILE: &str = "metadata.csv";
pub const EXPERT_FILE: &str = "expert_trajectory.csv";
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const GENERALIZATION_TRUTH_FILE: &str = "generalization_truth.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(csv::Writer::from_path(path)?)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(";")
}

fn parse<T: std::str::FromStr>(field: &str, path: &Path) -> Result<T> {
    field.parse().map_err(|_| GameError::Io(format!("{}: cannot parse `{field}`", path.display())))
}

fn write_states(w: &mut csv::Writer<File>, prefix: &[String], states: &[Vector]) -> Result<()> {
    for (t, x) in states.iter().enumerate() {
        for (k, v) in x.iter().enumerate() {
            let mut row = prefix.to_vec();
            row.extend([t.to_string(), k.to_string(), num(*v)]);
            w.write_record(&row)?;
        }
    }
    Ok(())
}

/// Collects `(t, coordinate_index, value)` triples into state vectors.
#[derive(Default)]
struct StateBuilder(Vec<Vec<f64>>);

impl StateBuilder {
    fn set(&mut self, t: usize, k: usize, v: f64) {
        if self.0.len() <= t {
            self.0.resize(t + 1, Vec::new());
        }
        if self.0[t].len() <= k {
            self.0[t].resize(k + 1, f64::NAN);
        }
        self.0[t][k] = v;
    }

    fn finish(self) -> Vec<Vector> {
        self.0.into_iter().map(Vector::from_vec).collect()
    }
}

/// `t, coordinate_index, value` for every state of `traj`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "coordinate_index", "value"])?;
    write_states(&mut w, &[], &traj.states)?;
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Vector>> {
    let mut states = StateBuilder::default();
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        states.set(parse(&row[0], path)?, parse(&row[1], path)?, parse(&row[2], path)?);
    }
    Ok(states.finish())
}

/// `sigma_index, sigma, seed_index, t, coordinate_index, value`, where
/// `coordinate_index` is the observed state coordinate.
pub fn write_observations_csv(path: &Path, sets: &[(ArmKey, ObservationSet)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sigma_index", "sigma", "seed_index", "t", "coordinate_index", "value"])?;
    for (arm, obs) in sets {
        for (t, y) in obs.iter() {
            for (&k, v) in obs.model.selection.iter().zip(y.iter()) {
                w.write_record([
                    arm.sigma_index.to_string(),
                    num(obs.model.sigma),
                    arm.seed_index.to_string(),
                    t.to_string(),
                    k.to_string(),
                    num(*v),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations_csv(path: &Path) -> Result<BTreeMap<ArmKey, ObservationSet>> {
    let mut raw: BTreeMap<ArmKey, (f64, BTreeMap<usize, Vec<(usize, f64)>>)> = BTreeMap::new();
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        let arm = ArmKey { sigma_index: parse(&row[0], path)?, seed_index: parse(&row[2], path)? };
        let entry = raw.entry(arm).or_insert_with(|| (0.0, BTreeMap::new()));
        entry.0 = parse(&row[1], path)?;
        entry.1.entry(parse(&row[3], path)?).or_default().push((parse(&row[4], path)?, parse(&row[5], path)?));
    }
    let mut out = BTreeMap::new();
    for (arm, (sigma, stages)) in raw {
        let selection: Vec<usize> = stages.values().next().map(|v| v.iter().map(|p| p.0).collect()).unwrap_or_default();
        let times: Vec<usize> = stages.keys().copied().collect();
        let measurements = stages.values().map(|v| Vector::from_iterator(v.len(), v.iter().map(|p| p.1))).collect();
        out.insert(arm, ObservationSet { model: ObservationModel::new(selection, times, sigma), measurements });
    }
    Ok(out)
}

/// Key of a per-arm trajectory in `trajectories.csv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrajectoryKey {
    pub arm: ArmKey,
    pub method: String,
    /// `predicted` or `generalization`.
    pub kind: String,
    pub sample: usize,
}

pub fn read_arm_trajectories(path: &Path) -> Result<BTreeMap<TrajectoryKey, Vec<Vector>>> {
    let mut raw: BTreeMap<TrajectoryKey, StateBuilder> = BTreeMap::new();
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        let key = TrajectoryKey {
            arm: ArmKey { sigma_index: parse(&row[0], path)?, seed_index: parse(&row[1], path)? },
            method: row[2].to_string(),
            kind: row[3].to_string(),
            sample: parse(&row[4], path)?,
        };
        raw.entry(key).or_default().set(parse(&row[5], path)?, parse(&row[6], path)?, parse(&row[7], path)?);
    }
    Ok(raw.into_iter().map(|(k, b)| (k, b.finish())).collect())
}

pub fn read_generalization_truth(path: &Path) -> Result<Vec<Vec<Vector>>> {
    let mut raw: BTreeMap<usize, StateBuilder> = BTreeMap::new();
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        raw.entry(parse(&row[0], path)?).or_default().set(parse(&row[1], path)?, parse(&row[2], path)?, parse(&row[3], path)?);
    }
    Ok(raw.into_values().map(StateBuilder::finish).collect())
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub config_hash: String,
    pub sigma_index: usize,
    pub sigma: f64,
    pub seed_index: usize,
    pub method: String,
    pub metric_a: f64,
    pub metric_b: f64,
    pub metric_c: f64,
    pub metric_a_rms: f64,
    pub metric_b_relative: f64,
    pub metric_c_relative: f64,
    pub final_loss: f64,
    pub converged: bool,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub line_search_failures: usize,
    /// `;`-separated.
    pub theta: String,
    /// `;`-separated.
    pub x1: String,
    pub error: String,
}

impl RecordRow {
    pub fn from_record(r: &MonteCarloRecord) -> Self {
        Self {
            config_hash: r.config_hash.clone(),
            sigma_index: r.arm.sigma_index,
            sigma: r.sigma,
            seed_index: r.arm.seed_index,
            method: r.method.record_label().to_string(),
            metric_a: r.metrics.a,
            metric_b: r.metrics.b,
            metric_c: r.metrics.c,
            metric_a_rms: r.metrics.a_rms,
            metric_b_relative: r.metrics.b_relative,
            metric_c_relative: r.metrics.c_relative,
            final_loss: r.final_loss,
            converged: r.converged,
            iterations: r.iterations,
            accepted_steps: r.accepted_steps,
            line_search_failures: r.line_search_failures,
            theta: join(r.theta.iter().copied()),
            x1: join(r.x1.iter().copied()),
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_path(path)?.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

fn write_metadata(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let cfg = &run.config;
    let model = &cfg.model;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut w = writer(path)?;
    w.write_record(["key", "value"])?;
    let rows = [
        ("config_hash", run.config_hash.clone()),
        ("rng_algorithm", RNG_ALGORITHM.to_string()),
        ("master_seed", cfg.seed.to_string()),
        ("model", model.name.clone()),
        ("dt", opt(model.dt)),
        ("horizon", run.expert.horizon().to_string()),
        ("target", opt(model.target)),
        ("sigmas", join(cfg.observation.sigmas.iter().copied())),
        ("seeds_per_level", cfg.observation.seeds_per_level.to_string()),
        ("methods", cfg.solver.methods.iter().map(|m| m.record_label()).collect::<Vec<_>>().join(";")),
        ("generalization_count", cfg.generalization.count.to_string()),
        ("generalization_half_width", num(cfg.generalization.half_width)),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_records(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let mut w = writer(path)?;
    for r in run.records() {
        w.serialize(RecordRow::from_record(r))?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> =
        ["config_hash", "sigma_index", "sigma", "method", "arms", "finite", "converged", "mean_final_loss"]
            .map(String::from)
            .to_vec();
    for m in ["a", "b", "c"] {
        for s in ["mean", "std_dev", "std_error", "variance_over_sqrt_n"] {
            header.push(format!("metric_{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    for s in &run.summary {
        let mut row = vec![
            run.config_hash.clone(),
            s.sigma_index.to_string(),
            num(s.sigma),
            s.method.record_label().to_string(),
            s.arms.to_string(),
            s.finite.to_string(),
            s.converged.to_string(),
            num(s.mean_final_loss),
        ];
        for st in [s.a, s.b, s.c] {
            row.extend([num(st.mean), num(st.std_dev), num(st.std_error), num(st.variance_over_sqrt_n)]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_arm_trajectories(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sigma_index", "seed_index", "method", "kind", "sample", "t", "coordinate_index", "value"])?;
    for arm in &run.arms {
        let r = &arm.record;
        let prefix = |kind: &str, sample: usize| {
            vec![
                r.arm.sigma_index.to_string(),
                r.arm.seed_index.to_string(),
                r.method.record_label().to_string(),
                kind.to_string(),
                sample.to_string(),
            ]
        };
        if let Some(p) = &arm.predicted {
            write_states(&mut w, &prefix("predicted", 0), &p.states)?;
        }
        for (k, g) in arm.generalization.iter().enumerate() {
            write_states(&mut w, &prefix("generalization", k), &g.states)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_generalization_truth(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sample", "t", "coordinate_index", "value"])?;
    for (k, g) in run.generalization_truth.iter().enumerate() {
        write_states(&mut w, &[k.to_string()], &g.states)?;
    }
    w.flush()?;
    Ok(())
}

/// Wall-clock seconds per arm. Not reproducible, hence kept apart.
pub fn write_timings(path: &Path, run: &MonteCarloRun) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["config_hash", "sigma_index", "seed_index", "method", "wall_seconds"])?;
    for r in run.records() {
        w.write_record([
            r.config_hash.clone(),
            r.arm.sigma_index.to_string(),
            r.arm.seed_index.to_string(),
            r.method.record_label().to_string(),
            num(r.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write the reproducible outputs of `run` into `dir`, plus `timings.csv`
/// when `timings` is set. Returns the written paths.
pub fn write_montecarlo(run: &MonteCarloRun, dir: &Path, timings: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);
    write_metadata(&path(METADATA_FILE), run)?;
    write_trajectory_csv(&path(EXPERT_FILE), &run.expert)?;
    write_observations_csv(&path(OBSERVATIONS_FILE), &run.observations)?;
    write_generalization_truth(&path(GENERALIZATION_TRUTH_FILE), run)?;
    write_arm_trajectories(&path(TRAJECTORIES_FILE), run)?;
    write_records(&path(RECORDS_FILE), run)?;
    write_summary(&path(SUMMARY_FILE), run)?;
    let mut written: Vec<PathBuf> = [
        METADATA_FILE,
        EXPERT_FILE,
        OBSERVATIONS_FILE,
        GENERALIZATION_TRUTH_FILE,
        TRAJECTORIES_FILE,
        RECORDS_FILE,
        SUMMARY_FILE,
    ]
    .iter()
    .map(|n| path(n))
    .collect();
    if timings {
        write_timings(&path(TIMINGS_FILE), run)?;
        written.push(path(TIMINGS_FILE));
    }
    Ok(written)
}
