//! JSON report organized by roadmap step, plus the CSV row types written beside it.

use serde::{Deserialize, Serialize};
use targeted_core::data::{ColumnSpec, Finding, ValidationReport};
use targeted_core::diagnostics::{DoseBin, OverlapSummary, PositivityTable};
use targeted_core::sensitivity::SensitivityCurve;
use targeted_core::sim::{OracleTruth, ReplicationSummary};
use targeted_core::super_learner::SuperLearnerFit;
use targeted_core::tmle::{Fluctuation, Inference, ParametricBaseline, TmleResult};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_NAME: &str = "targeted";

pub const STEP_LABELS: &str = "Steps are numbered 0-5: question, statistical model, causal estimand, \
identification, estimation, interpretation. A 1-6 numbering of the same stages maps step k to k+1.";

pub const META_LEARNER: &str = "convex combination of learner predictions minimizing cross-validated loss";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
    /// Blocked by a failure in an earlier step.
    NotRun,
    /// Outside the scope of the command.
    #[default]
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool: Tool,
    pub command: String,
    pub seed: u64,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub step_labels: String,
    pub steps: Steps,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            tool: Tool {
                name: TOOL_NAME.into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            command: command.into(),
            seed,
            exit_code: 0,
            error: None,
            step_labels: STEP_LABELS.into(),
            steps: Steps::default(),
            simulation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Steps {
    pub step_0_question: QuestionStep,
    pub step_1_statistical_model: ModelStep,
    pub step_2_causal_estimand: EstimandStep,
    pub step_3_identification: IdentificationStep,
    pub step_4_estimation: EstimationStep,
    pub step_5_interpretation: InterpretationStep,
}

impl Steps {
    /// Marks every step after `step` as blocked.
    pub fn block_after(&mut self, step: usize) {
        let statuses = [
            &mut self.step_0_question.status,
            &mut self.step_1_statistical_model.status,
            &mut self.step_2_causal_estimand.status,
            &mut self.step_3_identification.status,
            &mut self.step_4_estimation.status,
            &mut self.step_5_interpretation.status,
        ];
        for s in statuses.into_iter().skip(step + 1) {
            *s = Status::NotRun;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionStep {
    pub status: Status,
    pub question: String,
}

impl Default for QuestionStep {
    fn default() -> Self {
        Self {
            status: Status::Skipped,
            question: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStep {
    pub status: Status,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub columns: Vec<ColumnSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complete_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treatment_definition: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub recoded: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

impl Default for ModelStep {
    fn default() -> Self {
        Self {
            status: Status::Skipped,
            model: "nonparametric: no restriction on the joint distribution of (W, A, Y) beyond the time \
                    ordering baseline covariates W, then treatment A, then outcome Y"
                .into(),
            data_path: None,
            columns: Vec::new(),
            rows: None,
            complete_rows: None,
            treatment_definition: None,
            recoded: Vec::new(),
            validation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandStep {
    pub status: Status,
    pub causal: String,
    pub statistical: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treatment: Option<String>,
    pub adjustment_set: Vec<String>,
    pub contrasts: Vec<String>,
}

impl Default for EstimandStep {
    fn default() -> Self {
        Self {
            status: Status::Skipped,
            causal: "psi_causal = E(Y_1 - Y_0)".into(),
            statistical: "psi_stat = E[E(Y | A=1, W) - E(Y | A=0, W)]".into(),
            outcome: None,
            treatment: None,
            adjustment_set: Vec::new(),
            contrasts: ["risk_difference", "risk_ratio", "odds_ratio"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationStep {
    pub status: Status,
    pub assumptions: Vec<String>,
    #[serde(default)]
    pub positivity: Vec<PositivityTable>,
    #[serde(default)]
    pub timing: Vec<Finding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dose_table: Option<Vec<DoseBin>>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl Default for IdentificationStep {
    fn default() -> Self {
        Self {
            status: Status::Skipped,
            assumptions: ["consistency", "positivity", "no unmeasured confounding (coarsening at random)"]
                .map(String::from)
                .to_vec(),
            positivity: Vec::new(),
            timing: Vec::new(),
            dose_table: None,
            notes: Vec::new(),
            hint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    pub q_library: Vec<String>,
    pub g_library: Vec<String>,
    pub folds: usize,
    pub stratify_folds: bool,
    pub seed: u64,
    pub loss: String,
    pub g_bound: f64,
    pub g_bound_source: String,
    pub q_bound: f64,
    pub meta_learner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub learner: String,
    pub weight: f64,
    pub cv_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLearnerSummary {
    pub learners: Vec<LearnerSummary>,
    pub ensemble_cv_risk: f64,
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
}

impl From<&SuperLearnerFit> for SuperLearnerSummary {
    fn from(fit: &SuperLearnerFit) -> Self {
        Self {
            learners: fit
                .library
                .iter()
                .zip(&fit.weights)
                .zip(&fit.cv_risks)
                .map(|((l, &weight), &cv_risk)| LearnerSummary {
                    learner: l.to_string(),
                    weight,
                    cv_risk,
                })
                .collect(),
            ensemble_cv_risk: fit.ensemble_cv_risk,
            dropped: fit.dropped.iter().map(ToString::to_string).collect(),
            warnings: fit.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLearners {
    pub q: SuperLearnerSummary,
    pub g: SuperLearnerSummary,
}

/// The estimation result without per-observation influence curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub n: usize,
    pub mu1: f64,
    pub mu0: f64,
    pub rd: Inference,
    pub rr: Option<Inference>,
    pub or: Option<Inference>,
    pub mean_ic_rd: f64,
    pub gcomp_rd: f64,
    pub fluctuation: Fluctuation,
    pub g_bound: f64,
    pub truncation_count: usize,
}

impl From<&TmleResult> for EstimationResult {
    fn from(r: &TmleResult) -> Self {
        Self {
            n: r.n,
            mu1: r.mu1,
            mu0: r.mu0,
            rd: r.rd,
            rr: r.rr,
            or: r.or,
            mean_ic_rd: r.mean_ic_rd,
            gcomp_rd: r.gcomp_rd,
            fluctuation: r.fluctuation,
            g_bound: r.g_bound,
            truncation_count: r.truncation_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimationStep {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<EstimationSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<EstimationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub super_learner: Option<SuperLearners>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propensity_overlap: Option<OverlapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSection {
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ParametricBaseline>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InterpretationStep {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub dgp: String,
    pub truth: OracleTruth,
    pub summary: ReplicationSummary,
}

/// Plain-language reading of the sensitivity thresholds.
pub fn interpretation_summary(curve: &SensitivityCurve) -> String {
    let mut parts = vec![format!(
        "Estimate {:.4} with 95% CI [{:.4}, {:.4}].",
        curve.psi, curve.lower, curve.upper
    )];
    if let Some(t) = curve.threshold_significance_pos.or(curve.threshold_significance_neg) {
        parts.push(format!("A causal gap of {t:.4} ({:.2} SE) removes statistical significance.", t / curve.se));
    } else {
        parts.push("The interval already contains 0.".into());
    }
    if let Some(t) = curve.threshold_sign_reversal_pos.or(curve.threshold_sign_reversal_neg) {
        parts.push(format!(
            "A causal gap beyond {t:.4} ({:.2} SE) reverses the sign of the whole interval.",
            t / curve.se
        ));
    }
    parts.join(" ")
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapRow {
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub n_control: usize,
    pub n_treated: usize,
}

pub const OVERLAP_HEADER: [&str; 4] = ["bin_lower", "bin_upper", "n_control", "n_treated"];
pub const POSITIVITY_HEADER: [&str; 4] = ["level", "n_control", "n_treated", "zero_cell"];
pub const DOSE_HEADER: [&str; 6] = ["label", "lower", "upper", "n", "events", "proportion"];
pub const SENSITIVITY_HEADER: [&str; 5] = ["delta", "delta_se_units", "estimate", "lower", "upper"];
pub const SIMULATION_HEADER: [&str; 11] = [
    "estimator",
    "kind",
    "reps",
    "mean_estimate",
    "mean_bias",
    "sd",
    "mean_se",
    "coverage",
    "mean_ci_width",
    "max_abs_mean_ic",
    "truth",
];
pub const REPLICATES_HEADER: [&str; 8] = ["replicate", "seed", "estimator", "estimate", "se", "lower", "upper", "mean_ic"];
