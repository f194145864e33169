//! Targeted estimation of the marginal risk difference, risk ratio and odds ratio.
//!
//! Binary treatment `A` and outcome `Y`. The outcome regression `Q(A, W)` and the
//! propensity score `g(W)` are fit by super learning; `Q` is then fluctuated along
//! the clever covariates `H1 = A/g` and `H0 = -(1-A)/(1-g)` so the efficient
//! influence-curve equation holds, and inference uses the influence curve.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{AnalysisData, Dataset, Finding, TIMING_VIOLATION};
use crate::learners::glm::{self, IrlsOptions};
use crate::learners::{LearnerSpec, Loss};
use crate::math::{clamp, exp, expit, ln, logit, mean, sample_variance, sqrt};
use crate::super_learner::{fit_super_learner, make_folds, FoldAssignment, SuperLearnerFit};
use crate::{Error, Matrix, Result};

pub const Z_95: f64 = 1.96;
pub const DEFAULT_Q_BOUND: f64 = 1e-5;

/// `5 / (sqrt(n) ln n)`; errors when the result is not below 0.5.
pub fn truncation_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("truncation bound needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let bound = 5.0 / (sqrt(nf) * ln(nf));
    if bound >= 0.5 {
        return Err(Error::BoundRequiresOverride { n, bound });
    }
    Ok(bound)
}

/// The bound in force: an explicit override in `[0, 0.5)` (0 disables truncation),
/// otherwise [`truncation_bound`].
pub fn resolve_g_bound(n: usize, explicit: Option<f64>) -> Result<f64> {
    match explicit {
        Some(b) if (0.0..0.5).contains(&b) => Ok(b),
        Some(b) => Err(Error::InvalidArgument(format!("g_bound must lie in [0, 0.5), got {b}"))),
        None => truncation_bound(n),
    }
}

/// Fitted nuisance functions evaluated on the analysis rows.
#[derive(Debug, Clone)]
pub struct NuisanceFits {
    pub q: SuperLearnerFit,
    pub g: SuperLearnerFit,
    /// Initial `Q(1, W_i)` and `Q(0, W_i)` as predicted by the super learner.
    pub q1: Vec<f64>,
    pub q0: Vec<f64>,
    /// Propensity scores after truncation.
    pub g_values: Vec<f64>,
    pub g_raw: Vec<f64>,
    pub g_bound: f64,
    pub truncation_count: usize,
    pub q_bound: f64,
}

impl NuisanceFits {
    /// Untargeted plug-in risk difference from the initial `Q`.
    pub fn gcomp(&self) -> f64 {
        gcomp_estimate(&self.q1, &self.q0)
    }
}

/// Design for the outcome regression: treatment first, then the covariates.
pub fn outcome_design(a: &[f64], w: &Matrix) -> Result<Matrix> {
    Matrix::from_columns(&[a.to_vec()], vec![String::from("A")])?.hstack(w)
}

/// Counterfactual outcome design with treatment set to `value` for every row.
pub fn counterfactual_design(w: &Matrix, value: f64) -> Result<Matrix> {
    outcome_design(&vec![value; w.nrows()], w)
}

/// Fits `Q` on `(A, W)` and `g` on `W` by super learning, then truncates `g` to `[g_bound, 1 - g_bound]`.
pub fn fit_nuisances(
    data: &AnalysisData,
    q_library: &[LearnerSpec],
    g_library: &[LearnerSpec],
    folds: &FoldAssignment,
    g_bound: Option<f64>,
    q_bound: f64,
    loss: Loss,
) -> Result<NuisanceFits> {
    let n = data.y.len();
    let treated = data.a.iter().filter(|&&a| a == 1.0).count();
    if treated == 0 || treated == n {
        return Err(Error::Positivity(format!(
            "{} of {n} observations are treated; both arms are required",
            treated
        )));
    }
    if !(0.0..0.5).contains(&q_bound) {
        return Err(Error::InvalidArgument(format!("q_bound must lie in [0, 0.5), got {q_bound}")));
    }
    let bound = resolve_g_bound(n, g_bound)?;
    let q = fit_super_learner(q_library, &outcome_design(&data.a, &data.w)?, &data.y, folds, loss)?;
    let g = fit_super_learner(g_library, &data.w, &data.a, folds, loss)?;
    let q1 = q.predict(&counterfactual_design(&data.w, 1.0)?)?;
    let q0 = q.predict(&counterfactual_design(&data.w, 0.0)?)?;
    let g_raw = g.predict(&data.w)?;
    let truncation_count = g_raw.iter().filter(|&&p| p < bound || p > 1.0 - bound).count();
    let g_values = g_raw.iter().map(|&p| clamp(p, bound, 1.0 - bound)).collect();
    Ok(NuisanceFits {
        q,
        g,
        q1,
        q0,
        g_values,
        g_raw,
        g_bound: bound,
        truncation_count,
        q_bound,
    })
}

/// `(H1, H0)` with `H1 = A/g` and `H0 = -(1-A)/(1-g)`.
pub fn clever_covariates(a: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != g.len() {
        return Err(Error::Dimension(format!("{} treatments, {} scores", a.len(), g.len())));
    }
    if let Some(i) = g.iter().position(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::Positivity(format!(
            "propensity score {} at row {} is not strictly between 0 and 1",
            g[i],
            i + 1
        )));
    }
    let h1 = a.iter().zip(g).map(|(a, g)| a / g).collect();
    let h0 = a.iter().zip(g).map(|(a, g)| -(1.0 - a) / (1.0 - g)).collect();
    Ok((h1, h0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fluctuation {
    pub eps0: f64,
    pub eps1: f64,
    pub converged: bool,
}

/// Root of `sum_i h_i (y_i - expit(o_i + e h_i))` by safeguarded Newton steps.
///
/// Returns `(e, converged)`; without a finite root the search stops at a large `|e|`.
fn score_root(offset: &[f64], h: &[f64], y: &[f64]) -> (f64, bool) {
    let score = |e: f64| -> (f64, f64) {
        let mut s = 0.0;
        let mut d = 0.0;
        for i in 0..h.len() {
            if h[i] == 0.0 {
                continue;
            }
            let p = expit(offset[i] + e * h[i]);
            s += h[i] * (y[i] - p);
            d += h[i] * h[i] * p * (1.0 - p);
        }
        (s, d)
    };
    let scale: f64 = h.iter().map(|v| v.abs()).sum();
    if scale == 0.0 {
        return (0.0, true);
    }
    let tol = 1e-14 * scale;
    let (s0, _) = score(0.0);
    if s0.abs() <= tol {
        return (0.0, true);
    }
    // The score decreases in e; bracket the root.
    let dir = if s0 > 0.0 { 1.0 } else { -1.0 };
    let mut prev = 0.0;
    let mut step = 1.0;
    let (mut lo, mut hi) = loop {
        let e = dir * step;
        let (s, _) = score(e);
        if s.abs() <= tol {
            return (e, true);
        }
        if (s > 0.0) != (dir > 0.0) {
            break if dir > 0.0 { (prev, e) } else { (e, prev) };
        }
        if step >= 1e6 {
            return (e, false);
        }
        prev = e;
        step *= 2.0;
    };
    let mut e = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (s, d) = score(e);
        if s.abs() <= tol {
            return (e, true);
        }
        if s > 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        let newton = e + s / d;
        e = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + e.abs()) {
            return (e, true);
        }
    }
    (e, score(e).0.abs() <= 1e-10 * scale)
}

/// Fluctuation `logit Q* = logit Q + eps1 H1 + eps0 H0`: a logistic regression of
/// `Y` on `(H0, H1)` with offset `logit Q(A, W)` and no intercept.
///
/// `H1` and `H0` are supported on disjoint rows, so each coordinate solves its own
/// score equation exactly.
pub fn fluctuate(q_init: &[f64], h1: &[f64], h0: &[f64], y: &[f64]) -> Result<Fluctuation> {
    let n = y.len();
    if q_init.len() != n || h1.len() != n || h0.len() != n {
        return Err(Error::Dimension("fluctuation inputs differ in length".into()));
    }
    let offset: Vec<f64> = q_init.iter().map(|&q| logit(q)).collect();
    if let Some(i) = offset.iter().position(|o| !o.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial outcome prediction {} at row {} gives a non-finite offset",
            q_init[i],
            i + 1
        )));
    }
    if h1.iter().chain(h0).any(|h| !h.is_finite()) {
        return Err(Error::InvalidArgument("non-finite clever covariate".into()));
    }
    let (eps1, c1) = score_root(&offset, h1, y);
    let (eps0, c0) = score_root(&offset, h0, y);
    Ok(Fluctuation {
        eps0,
        eps1,
        converged: c0 && c1,
    })
}

/// Point estimate with standard error and 95% interval.
///
/// For ratios the standard error is on the log scale and the interval is exponentiated.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Inference {
    pub estimate: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TmleResult {
    pub n: usize,
    pub mu1: f64,
    pub mu0: f64,
    pub rd: Inference,
    /// Absent when `mu0 = 0`.
    pub rr: Option<Inference>,
    /// Absent when either targeted mean is 0 or 1.
    pub or: Option<Inference>,
    pub ic_rd: Vec<f64>,
    pub ic_log_rr: Option<Vec<f64>>,
    pub ic_log_or: Option<Vec<f64>>,
    pub mean_ic_rd: f64,
    pub fluctuation: Fluctuation,
    pub g_bound: f64,
    pub truncation_count: usize,
    pub gcomp_rd: f64,
    /// Targeted `Q*(1, W_i)` and `Q*(0, W_i)`.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub q1_star: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub q0_star: Vec<f64>,
}

fn ic_se(ic: &[f64]) -> f64 {
    sqrt(sample_variance(ic) / ic.len() as f64)
}

fn additive(estimate: f64, ic: &[f64]) -> Inference {
    let se = ic_se(ic);
    Inference {
        estimate,
        se,
        lower: estimate - Z_95 * se,
        upper: estimate + Z_95 * se,
    }
}

fn multiplicative(estimate: f64, ic_log: &[f64]) -> Inference {
    let se = ic_se(ic_log);
    let l = ln(estimate);
    Inference {
        estimate,
        se,
        lower: exp(l - Z_95 * se),
        upper: exp(l + Z_95 * se),
    }
}

/// Targeted estimates and influence-curve inference.
pub fn estimate(y: &[f64], a: &[f64], nuisances: &NuisanceFits, fluctuation: &Fluctuation) -> Result<TmleResult> {
    let n = y.len();
    if a.len() != n || nuisances.q1.len() != n {
        return Err(Error::Dimension("estimation inputs differ in length".into()));
    }
    let qb = nuisances.q_bound;
    let g = &nuisances.g_values;
    let (h1, h0) = clever_covariates(a, g)?;
    let bounded = |q: f64| logit(clamp(q, qb, 1.0 - qb));
    let q1s: Vec<f64> = (0..n).map(|i| expit(bounded(nuisances.q1[i]) + fluctuation.eps1 / g[i])).collect();
    let q0s: Vec<f64> = (0..n).map(|i| expit(bounded(nuisances.q0[i]) - fluctuation.eps0 / (1.0 - g[i]))).collect();
    let mu1 = mean(&q1s);
    let mu0 = mean(&q0s);
    let rd = mu1 - mu0;
    let mut ic1 = Vec::with_capacity(n);
    let mut ic0 = Vec::with_capacity(n);
    for i in 0..n {
        let qa = if a[i] == 1.0 { q1s[i] } else { q0s[i] };
        let r = y[i] - qa;
        ic1.push(h1[i] * r + q1s[i] - mu1);
        ic0.push(-h0[i] * r + q0s[i] - mu0);
    }
    let ic_rd: Vec<f64> = ic1.iter().zip(&ic0).map(|(u, v)| u - v).collect();
    let ic_log_rr: Option<Vec<f64>> =
        (mu0 > 0.0 && mu1 > 0.0).then(|| ic1.iter().zip(&ic0).map(|(u, v)| u / mu1 - v / mu0).collect());
    let interior = |m: f64| m > 0.0 && m < 1.0;
    let ic_log_or: Option<Vec<f64>> = (interior(mu0) && interior(mu1)).then(|| {
        ic1.iter()
            .zip(&ic0)
            .map(|(u, v)| u / (mu1 * (1.0 - mu1)) - v / (mu0 * (1.0 - mu0)))
            .collect()
    });
    Ok(TmleResult {
        n,
        mu1,
        mu0,
        rd: additive(rd, &ic_rd),
        rr: ic_log_rr.as_deref().map(|ic| multiplicative(mu1 / mu0, ic)),
        or: ic_log_or
            .as_deref()
            .map(|ic| multiplicative(mu1 * (1.0 - mu0) / (mu0 * (1.0 - mu1)), ic)),
        mean_ic_rd: mean(&ic_rd),
        ic_rd,
        ic_log_rr,
        ic_log_or,
        fluctuation: *fluctuation,
        g_bound: nuisances.g_bound,
        truncation_count: nuisances.truncation_count,
        gcomp_rd: nuisances.gcomp(),
        q1_star: q1s,
        q0_star: q0s,
    })
}

/// Mean of `Q(1, W) - Q(0, W)`; no standard error is attached.
pub fn gcomp_estimate(q1: &[f64], q0: &[f64]) -> f64 {
    mean(&q1.iter().zip(q0).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Settings for a complete targeted estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TmleConfig {
    pub q_library: Vec<LearnerSpec>,
    pub g_library: Vec<LearnerSpec>,
    pub folds: usize,
    pub seed: u64,
    /// Balance outcome events across folds.
    pub stratify: bool,
    pub g_bound: Option<f64>,
    pub q_bound: f64,
    pub loss: Loss,
}

impl TmleConfig {
    pub fn new(q_library: Vec<LearnerSpec>, g_library: Vec<LearnerSpec>) -> Self {
        Self {
            q_library,
            g_library,
            folds: crate::super_learner::DEFAULT_FOLDS,
            seed: crate::super_learner::DEFAULT_SEED,
            stratify: true,
            g_bound: None,
            q_bound: DEFAULT_Q_BOUND,
            loss: Loss::NegLogLik,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TmleRun {
    pub nuisances: NuisanceFits,
    pub result: TmleResult,
}

/// Folds, nuisance fits, fluctuation and estimation in one call.
pub fn run_tmle(data: &AnalysisData, config: &TmleConfig) -> Result<TmleRun> {
    let n = data.y.len();
    let folds = make_folds(n, config.folds, config.seed, config.stratify.then_some(("outcome", data.y.as_slice())))?;
    let nuisances = fit_nuisances(data, &config.q_library, &config.g_library, &folds, config.g_bound, config.q_bound, config.loss)?;
    let (h1, h0) = clever_covariates(&data.a, &nuisances.g_values)?;
    let qb = nuisances.q_bound;
    let q_init: Vec<f64> = (0..n)
        .map(|i| clamp(if data.a[i] == 1.0 { nuisances.q1[i] } else { nuisances.q0[i] }, qb, 1.0 - qb))
        .collect();
    let fluctuation = fluctuate(&q_init, &h1, &h0, &data.y)?;
    let result = estimate(&data.y, &data.a, &nuisances, &fluctuation)?;
    Ok(TmleRun { nuisances, result })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineTerm {
    pub name: String,
    pub coef: f64,
    pub se: Option<f64>,
    pub odds_ratio: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParametricBaseline {
    pub intercept: f64,
    pub terms: Vec<BaselineTerm>,
    pub converged: bool,
    pub warnings: Vec<Finding>,
}

/// Main-terms logistic regression of the outcome on the dose and `columns`, with
/// per-unit odds ratios and Wald intervals (suppressed when the fit did not converge).
pub fn parametric_baseline(ds: &Dataset, columns: &[String], dose: &str) -> Result<ParametricBaseline> {
    let y_col = ds.outcome().ok_or_else(|| Error::ColumnSpec("no outcome column".into()))?;
    let mut terms = vec![String::from(dose)];
    terms.extend(columns.iter().filter(|c| c.as_str() != dose).cloned());
    let mut warnings: Vec<Finding> = ds
        .validate(columns)
        .errors
        .into_iter()
        .filter(|f| f.code == TIMING_VIOLATION)
        .collect();
    let mut needed: Vec<&str> = vec![y_col.name()];
    needed.extend(terms.iter().map(String::as_str));
    let (complete, _) = ds.complete_cases(&needed)?;
    let x = complete.design(&terms)?;
    let y = complete.numeric_values(y_col.name())?;
    let fit = glm::logistic_irls(&x, &y, None, None, IrlsOptions::default())?;
    warnings.extend(fit.warnings.iter().map(|w| Finding::new("FIT_WARNING", None, w.clone())));
    let cov = if fit.converged { glm::logistic_covariance(&x, None, &fit) } else { None };
    let terms = x
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let b = fit.coef[j + 1];
            let se = cov.as_ref().map(|c| sqrt(c[(j + 1, j + 1)]));
            BaselineTerm {
                name: name.clone(),
                coef: b,
                se,
                odds_ratio: exp(b),
                lower: se.map(|s| exp(b - Z_95 * s)),
                upper: se.map(|s| exp(b + Z_95 * s)),
            }
        })
        .collect();
    Ok(ParametricBaseline {
        intercept: fit.coef[0],
        terms,
        converged: fit.converged,
        warnings,
    })
}
