//! Run configuration (TOML). One file fully determines a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use targeted_core::data::ColumnSpec;
use targeted_core::diagnostics::DEFAULT_DOSE_EDGES;
use targeted_core::learners::{LearnerSpec, Loss};
use targeted_core::sim::{Covariate, DgpSpec, EstimatorConfig, EstimatorKind, LinearPredictor};
use targeted_core::super_learner::{DEFAULT_FOLDS, DEFAULT_SEED};
use targeted_core::tmle::{TmleConfig, DEFAULT_Q_BOUND};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The scientific question, recorded verbatim as roadmap step 0.
    #[serde(default)]
    pub question: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub treatment: TreatmentConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    pub baseline: Option<BaselineConfig>,
    pub simulation: Option<SimulationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV path, relative to the config file.
    pub path: PathBuf,
    pub columns: Vec<ColumnSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentConfig {
    /// Dose column to dichotomize into any (dose > 0) versus none.
    pub dichotomize_dose: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub adjustment_set: Vec<String>,
    /// Categorical columns checked for empty treatment arms.
    #[serde(default)]
    pub stratifiers: Vec<String>,
    /// Category recoding applied before validation: column -> (old level -> new level).
    #[serde(default)]
    pub recode: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default = "default_dose_edges")]
    pub dose_edges: Vec<f64>,
}

fn default_dose_edges() -> Vec<f64> {
    DEFAULT_DOSE_EDGES.to_vec()
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            adjustment_set: Vec::new(),
            stratifiers: Vec::new(),
            recode: BTreeMap::new(),
            dose_edges: default_dose_edges(),
        }
    }
}

fn default_q_library() -> Vec<String> {
    ["intercept_only", "logistic", "lasso_logistic", "spline_logistic", "boosted_stumps"]
        .map(String::from)
        .to_vec()
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_loss() -> String {
    "nll".into()
}

fn default_q_bound() -> f64 {
    DEFAULT_Q_BOUND
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    #[serde(default = "default_q_library")]
    pub q_library: Vec<String>,
    #[serde(default = "default_q_library")]
    pub g_library: Vec<String>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
    /// Explicit propensity bound; 0 disables truncation. Defaults to 5 / (sqrt(n) ln n).
    pub g_bound: Option<f64>,
    #[serde(default = "default_q_bound")]
    pub q_bound: f64,
    #[serde(default = "default_true")]
    pub stratify_folds: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            q_library: default_q_library(),
            g_library: default_q_library(),
            folds: default_folds(),
            loss: default_loss(),
            g_bound: None,
            q_bound: default_q_bound(),
            stratify_folds: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    /// Gap values; defaults to 41 points over +/- 2|psi|.
    pub grid: Option<Vec<f64>>,
    /// A prior `report.json` to take the estimate from, relative to the config file.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub dose: String,
    pub columns: Vec<String>,
}

fn default_reps() -> usize {
    500
}

fn default_mc_size() -> usize {
    1_000_000
}

fn default_oracle_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Replicate `r` uses `base_seed + r`; defaults to the run seed.
    pub base_seed: Option<u64>,
    #[serde(default = "default_mc_size")]
    pub mc_size: usize,
    #[serde(default = "default_oracle_seed")]
    pub oracle_seed: u64,
    /// `dgp_a` for the canonical design, or `custom` with the fields below.
    #[serde(default = "default_dgp")]
    pub dgp: String,
    #[serde(default)]
    pub covariates: Vec<Covariate>,
    pub treatment_model: Option<String>,
    pub outcome_model: Option<String>,
    pub estimators: Vec<SimEstimatorConfig>,
}

fn default_dgp() -> String {
    "dgp_a".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEstimatorConfig {
    pub name: String,
    pub kind: EstimatorKind,
    #[serde(default)]
    pub q_library: Vec<String>,
    #[serde(default)]
    pub g_library: Vec<String>,
    pub folds: Option<usize>,
    pub g_bound: Option<f64>,
}

fn learners(specs: &[String], what: &str) -> Result<Vec<LearnerSpec>, ConfigError> {
    if specs.is_empty() {
        return Err(ConfigError::Invalid(format!("{what} is empty")));
    }
    specs
        .iter()
        .map(|s| s.parse().map_err(|e| ConfigError::Invalid(format!("{what}: {e}"))))
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Semantic checks that do not need the data.
    fn check(&self) -> Result<(), ConfigError> {
        self.loss()?;
        self.estimation_libraries()?;
        if let Some(b) = self.estimation.g_bound {
            if !(0.0..0.5).contains(&b) {
                return Err(ConfigError::Invalid(format!("estimation.g_bound must lie in [0, 0.5), got {b}")));
            }
        }
        if !(0.0..0.5).contains(&self.estimation.q_bound) {
            return Err(ConfigError::Invalid("estimation.q_bound must lie in [0, 0.5)".into()));
        }
        if let Some(sim) = &self.simulation {
            self.dgp()?;
            self.sim_estimators()?;
            if sim.reps == 0 {
                return Err(ConfigError::Invalid("simulation.reps must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn loss(&self) -> Result<Loss, ConfigError> {
        self.estimation.loss.parse().map_err(|e| ConfigError::Invalid(format!("estimation.loss: {e}")))
    }

    pub fn estimation_libraries(&self) -> Result<(Vec<LearnerSpec>, Vec<LearnerSpec>), ConfigError> {
        Ok((
            learners(&self.estimation.q_library, "estimation.q_library")?,
            learners(&self.estimation.g_library, "estimation.g_library")?,
        ))
    }

    pub fn tmle_config(&self) -> Result<TmleConfig, ConfigError> {
        let (q, g) = self.estimation_libraries()?;
        Ok(TmleConfig {
            folds: self.estimation.folds,
            seed: self.seed,
            stratify: self.estimation.stratify_folds,
            g_bound: self.estimation.g_bound,
            q_bound: self.estimation.q_bound,
            loss: self.loss()?,
            ..TmleConfig::new(q, g)
        })
    }

    pub fn dgp(&self) -> Result<DgpSpec, ConfigError> {
        let sim = self
            .simulation
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [simulation] section".into()))?;
        match sim.dgp.as_str() {
            "dgp_a" => {
                if !sim.covariates.is_empty() || sim.treatment_model.is_some() || sim.outcome_model.is_some() {
                    return Err(ConfigError::Invalid(
                        "simulation: covariates and models apply only to dgp = \"custom\"".into(),
                    ));
                }
                Ok(DgpSpec::dgp_a())
            }
            "custom" => {
                let parse = |s: &Option<String>, what: &str| -> Result<LinearPredictor, ConfigError> {
                    s.as_deref()
                        .ok_or_else(|| ConfigError::Invalid(format!("simulation.{what} is required")))?
                        .parse()
                        .map_err(|e| ConfigError::Invalid(format!("simulation.{what}: {e}")))
                };
                DgpSpec::new(
                    sim.covariates.clone(),
                    parse(&sim.treatment_model, "treatment_model")?,
                    parse(&sim.outcome_model, "outcome_model")?,
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            other => Err(ConfigError::Invalid(format!("unknown simulation.dgp `{other}`"))),
        }
    }

    pub fn sim_estimators(&self) -> Result<Vec<EstimatorConfig>, ConfigError> {
        let sim = self
            .simulation
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [simulation] section".into()))?;
        if sim.estimators.is_empty() {
            return Err(ConfigError::Invalid("simulation.estimators is empty".into()));
        }
        let base = self.tmle_config()?;
        sim.estimators
            .iter()
            .map(|e| {
                let (q, g) = match e.kind {
                    EstimatorKind::Oracle => (Vec::new(), Vec::new()),
                    EstimatorKind::Gcomp => (learners(&e.q_library, &format!("estimator {}: q_library", e.name))?, Vec::new()),
                    EstimatorKind::Tmle => (
                        learners(&e.q_library, &format!("estimator {}: q_library", e.name))?,
                        learners(&e.g_library, &format!("estimator {}: g_library", e.name))?,
                    ),
                };
                let mut cfg = EstimatorConfig::new(&e.name, e.kind, q, g);
                cfg.tmle = TmleConfig {
                    q_library: cfg.tmle.q_library,
                    g_library: cfg.tmle.g_library,
                    folds: e.folds.unwrap_or(base.folds),
                    g_bound: e.g_bound.or(base.g_bound),
                    ..base.clone()
                };
                Ok(cfg)
            })
            .collect()
    }
}

/// Resolves `path` against the directory holding the config file.
pub fn relative_to(config_path: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(path)
    }
}
