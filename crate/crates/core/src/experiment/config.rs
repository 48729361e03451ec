use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GameError, Result};
use crate::game::ObservationModel;
use crate::ilq::IlqOptions;
use crate::inverse::InverseOptions;
use crate::linalg::Vector;
use crate::zoo::{build_model, check_model_name, ModelParams, ZooModel};

/// Inverse method compared in the Monte Carlo study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fbne")]
    Fbne,
    #[serde(rename = "olne", alias = "olne_surrogate")]
    Olne,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Fbne, Method::Olne];

    /// Value of the `method` column in record files.
    pub fn record_label(self) -> &'static str {
        match self {
            Method::Fbne => "fbne",
            Method::Olne => "olne_surrogate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.record_label())
    }
}

impl FromStr for Method {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fbne" => Ok(Method::Fbne),
            "olne" | "olne_surrogate" => Ok(Method::Olne),
            _ => Err(GameError::Config(format!("unknown method `{s}` (expected fbne or olne)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Target lane `p_x^*` of the Dubins models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

/// Ground truth; omitted entries fall back to the model's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionPreset {
    /// Every state coordinate.
    Full,
    /// The model's partial selection (positions and headings for vehicles).
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    Preset(SelectionPreset),
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub selection: Selection,
    /// Unobserved stages as a one-based inclusive range `[first, last]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<[usize; 2]>,
    pub sigmas: Vec<f64>,
    pub seeds_per_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub methods: Vec<Method>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub regularization: f64,
    pub armijo: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    pub step_growth: f64,
    pub max_step: f64,
    /// Starting parameters; all ones when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    pub forward_max_iterations: usize,
    pub forward_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let inv = InverseOptions::default();
        let fwd = IlqOptions::default();
        Self {
            methods: Method::ALL.to_vec(),
            max_iterations: inv.max_iterations,
            tolerance: inv.tolerance,
            regularization: 0.0,
            armijo: inv.armijo,
            initial_step: inv.initial_step,
            shrink: inv.shrink,
            max_backtracks: inv.max_backtracks,
            step_growth: inv.step_growth,
            max_step: inv.max_step,
            theta0: None,
            forward_max_iterations: fwd.max_iterations,
            forward_tolerance: fwd.tolerance,
        }
    }
}

impl SolverConfig {
    pub fn inverse_options(&self) -> InverseOptions {
        InverseOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            armijo: self.armijo,
            initial_step: self.initial_step,
            shrink: self.shrink,
            max_backtracks: self.max_backtracks,
            step_growth: self.step_growth,
            max_step: self.max_step,
        }
    }

    pub fn forward_options(&self) -> IlqOptions {
        IlqOptions { max_iterations: self.forward_max_iterations, tolerance: self.forward_tolerance, ..IlqOptions::default() }
    }
}

/// Unseen initial states for the generalization metric: uniform in a box of
/// the given half-width around `x1*` on position coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralizationConfig {
    pub count: usize,
    pub half_width: f64,
}

impl Default for GeneralizationConfig {
    fn default() -> Self {
        Self { count: 10, half_width: 0.5 }
    }
}

/// Full description of an experiment. Serialized as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed of all random streams.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default)]
    pub truth: TruthConfig,
    pub observation: ObservationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub generalization: GeneralizationConfig,
}

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "NASHGAME_OUT_DIR";

impl ExperimentConfig {
    /// Desk-scale Monte Carlo study on `dubins2`: three noise levels, five
    /// seeds each, positions and headings observed outside stages 11..=19.
    pub fn desk_scale() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            model: ModelConfig { name: "dubins2".into(), dt: Some(0.1), horizon: Some(40), target: Some(0.0) },
            truth: TruthConfig::default(),
            observation: ObservationConfig {
                selection: Selection::Preset(SelectionPreset::Partial),
                gap: Some([11, 19]),
                sigmas: vec![0.004, 0.02, 0.04],
                seeds_per_level: 5,
            },
            solver: SolverConfig::default(),
            generalization: GeneralizationConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| GameError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GameError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GameError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML form with `output_dir` blanked, so the
    /// hash identifies the experiment rather than where it was written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = canonical.to_toml_string().expect("validated configs serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `output_dir`, overridden by [`OUTPUT_DIR_ENV`] when set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams { dt: self.model.dt, horizon: self.model.horizon, target: self.model.target }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GameError::Config(msg));
        check_model_name(&self.model.name).map_err(|e| GameError::Config(e.to_string()))?;
        if let Some(dt) = self.model.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("model.dt must be positive, got {dt}"));
            }
        }
        if let Some(h) = self.model.horizon {
            if h < 2 {
                return bad(format!("model.horizon must be at least 2, got {h}"));
            }
        }
        if self.model.target.is_some_and(|t| !t.is_finite()) {
            return bad("model.target must be finite".into());
        }
        let obs = &self.observation;
        if obs.sigmas.is_empty() {
            return bad("observation.sigmas must not be empty".into());
        }
        if let Some(s) = obs.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return bad(format!("observation.sigmas entries must be finite and non-negative, got {s}"));
        }
        if obs.seeds_per_level < 1 {
            return bad("observation.seeds_per_level must be at least 1".into());
        }
        if let Some([a, b]) = obs.gap {
            if a < 1 || a > b {
                return bad(format!("observation.gap must satisfy 1 <= first <= last, got [{a}, {b}]"));
            }
        }
        let s = &self.solver;
        if s.methods.is_empty() {
            return bad("solver.methods must not be empty".into());
        }
        if !(s.regularization >= 0.0 && s.regularization.is_finite()) {
            return bad(format!("solver.regularization must be non-negative, got {}", s.regularization));
        }
        let g = &self.generalization;
        if !(g.half_width >= 0.0 && g.half_width.is_finite()) {
            return bad(format!("generalization.half_width must be non-negative, got {}", g.half_width));
        }
        self.resolve()?;
        let opts = s.inverse_options();
        if !(opts.tolerance > 0.0
            && opts.armijo > 0.0
            && opts.armijo < 1.0
            && opts.initial_step > 0.0
            && opts.shrink > 0.0
            && opts.shrink < 1.0
            && opts.step_growth >= 1.0
            && opts.max_step >= opts.initial_step)
        {
            return bad(format!("invalid solver line-search settings: {opts:?}"));
        }
        s.forward_options().validate().map_err(|e| GameError::Config(e.to_string()))?;
        Ok(())
    }

    /// Build the model and fill in every defaulted quantity.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let cfg = |e: GameError| GameError::Config(e.to_string());
        let model = build_model(&self.model.name, &self.model_params()).map_err(cfg)?;
        let shape = model.descriptor.shape.clone();
        let n = shape.n();
        let horizon = shape.horizon();
        let p = model.cost.num_params();

        let theta_true = self.truth.theta.clone().unwrap_or_else(|| model.theta.clone());
        if theta_true.len() != p || theta_true.iter().any(|v| !v.is_finite()) {
            return Err(GameError::Config(format!("truth.theta must hold {p} finite values")));
        }
        let x1_true = match &self.truth.x1 {
            Some(x) => Vector::from_vec(x.clone()),
            None => model.x1.clone(),
        };
        if x1_true.len() != n || x1_true.iter().any(|v| !v.is_finite()) {
            return Err(GameError::Config(format!("truth.x1 must hold {n} finite values")));
        }
        let theta0 = self.solver.theta0.clone().unwrap_or_else(|| vec![1.0; p]);
        if theta0.len() != p || theta0.iter().any(|v| !v.is_finite()) {
            return Err(GameError::Config(format!("solver.theta0 must hold {p} finite values")));
        }

        let selection = match &self.observation.selection {
            Selection::Preset(SelectionPreset::Full) => (0..n).collect(),
            Selection::Preset(SelectionPreset::Partial) => model.partial_selection.clone(),
            Selection::Indices(idx) => idx.clone(),
        };
        let times = match self.observation.gap {
            Some([a, b]) => ObservationModel::times_with_gap(horizon, (a - 1)..=(b - 1)),
            None => (0..horizon).collect(),
        };
        let observation = ObservationModel::new(selection, times, 0.0);
        observation.validate(n, horizon).map_err(cfg)?;

        Ok(ResolvedExperiment { model, theta_true, x1_true, theta0, observation })
    }
}

/// Configuration with the model built and defaults filled in.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub model: ZooModel,
    pub theta_true: Vec<f64>,
    pub x1_true: Vector,
    pub theta0: Vec<f64>,
    /// Observation model with `sigma = 0`; arms substitute their own level.
    pub observation: ObservationModel,
}

impl ResolvedExperiment {
    pub fn observation_at(&self, sigma: f64) -> ObservationModel {
        ObservationModel { sigma, ..self.observation.clone() }
    }
}
