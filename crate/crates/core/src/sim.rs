//! Known-truth data generation and replication studies.
//!
//! Draws are made with `ChaCha8Rng::seed_from_u64(seed)`, one observation at a
//! time: covariates in declaration order, then `A ~ Bernoulli(g0(W))`, then
//! `Y ~ Bernoulli(Q0(A, W))`. Replicate `r` of a study uses seed `base + r`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{AnalysisData, Column, ColumnData, ColumnSpec, Dataset, Kind, Role, Timing};
use crate::learners::LearnerSpec;
use crate::math::{clamp, expit, mean, sample_variance, sqrt};
use crate::tmle::{self, TmleConfig};
use crate::{Error, Matrix, Result};

pub const TREATMENT: &str = "A";
pub const OUTCOME: &str = "Y";
pub const MIN_MC_SIZE: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "distribution", rename_all = "snake_case", deny_unknown_fields))]
pub enum Distribution {
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    /// Optionally clipped to `[clip_low, clip_high]`.
    Normal {
        mean: f64,
        sd: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        clip_low: Option<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        clip_high: Option<f64>,
    },
}

impl Distribution {
    fn check(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Distribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            Distribution::Normal { mean, sd, clip_low, clip_high } => {
                mean.is_finite()
                    && sd > 0.0
                    && sd.is_finite()
                    && match (clip_low, clip_high) {
                        (Some(l), Some(h)) => l < h,
                        _ => true,
                    }
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Dgp(format!("invalid parameters for covariate `{name}`: {self:?}")))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
            Distribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Distribution::Normal { mean, sd, clip_low, clip_high } => {
                let z: f64 = rng.sample(StandardNormal);
                let v = mean + sd * z;
                let v = clip_low.map_or(v, |l| v.max(l));
                clip_high.map_or(v, |h| v.min(h))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Covariate {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub distribution: Distribution,
}

/// One product term: `coef * f1 * f2 * ...` (no factors for the intercept).
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub factors: Vec<String>,
}

/// A linear predictor such as `-0.4 + 0.8*W1 - 0.3*W3 + 0.4*A*W1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearPredictor {
    pub terms: Vec<Term>,
}

impl LinearPredictor {
    pub fn variables(&self) -> BTreeSet<&str> {
        self.terms.iter().flat_map(|t| t.factors.iter().map(String::as_str)).collect()
    }

    /// Evaluates with `lookup` resolving variable names.
    pub fn eval(&self, lookup: impl Fn(&str) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.factors.iter().fold(t.coef, |acc, f| acc * lookup(f)))
            .sum()
    }
}

fn parse_term(text: &str, sign: f64) -> Result<Term> {
    let mut coef = sign;
    let mut factors = Vec::new();
    for factor in text.split('*').map(str::trim) {
        if factor.is_empty() {
            return Err(Error::Dgp(format!("empty factor in `{text}`")));
        }
        if let Ok(v) = factor.parse::<f64>() {
            coef *= v;
        } else if factor.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && factor.chars().all(|c| c.is_alphanumeric() || c == '_')
        {
            factors.push(factor.to_string());
        } else {
            return Err(Error::Dgp(format!("cannot parse factor `{factor}`")));
        }
    }
    Ok(Term { coef, factors })
}

impl FromStr for LinearPredictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut current = String::new();
        let mut prev: Option<char> = None;
        for c in s.chars() {
            // A sign after an exponent marker belongs to the number.
            let in_exponent = matches!(prev, Some('e' | 'E'))
                && current.trim_end().len() > 1
                && current.trim()[..current.trim().len() - 1].parse::<f64>().is_ok();
            if (c == '+' || c == '-') && !in_exponent {
                if !current.trim().is_empty() {
                    terms.push(parse_term(current.trim(), sign)?);
                    sign = 1.0;
                } else if prev.is_some_and(|p| p == '*') {
                    return Err(Error::Dgp(format!("unexpected sign in `{s}`")));
                }
                if c == '-' {
                    sign = -sign;
                }
                current.clear();
            } else {
                current.push(c);
            }
            if !c.is_whitespace() {
                prev = Some(c);
            }
        }
        if current.trim().is_empty() {
            return Err(Error::Dgp(format!("incomplete expression `{s}`")));
        }
        terms.push(parse_term(current.trim(), sign)?);
        Ok(Self { terms })
    }
}

impl fmt::Display for LinearPredictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let c = if i == 0 {
                write!(f, "{}", if t.coef < 0.0 { "-" } else { "" })?;
                crate::math::abs(t.coef)
            } else {
                write!(f, " {} ", if t.coef < 0.0 { "-" } else { "+" })?;
                crate::math::abs(t.coef)
            };
            write!(f, "{c}")?;
            for factor in &t.factors {
                write!(f, "*{factor}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub covariates: Vec<Covariate>,
    /// `logit g0(W)`.
    pub treatment: LinearPredictor,
    /// `logit Q0(A, W)`.
    pub outcome: LinearPredictor,
}

impl DgpSpec {
    pub fn new(covariates: Vec<Covariate>, treatment: LinearPredictor, outcome: LinearPredictor) -> Result<Self> {
        let spec = Self { covariates, treatment, outcome };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for c in &self.covariates {
            c.distribution.check(&c.name)?;
            if c.name == TREATMENT || c.name == OUTCOME || !names.insert(c.name.as_str()) {
                return Err(Error::Dgp(format!("covariate name `{}` is reserved or repeated", c.name)));
            }
        }
        for v in self.treatment.variables() {
            if !names.contains(v) {
                return Err(Error::Dgp(format!("treatment model references undeclared `{v}`")));
            }
        }
        for v in self.outcome.variables() {
            if v != TREATMENT && !names.contains(v) {
                return Err(Error::Dgp(format!("outcome model references undeclared `{v}`")));
            }
        }
        Ok(())
    }

    /// The canonical simulation design.
    pub fn dgp_a() -> Self {
        let covariates = vec![
            Covariate { name: "W1".into(), distribution: Distribution::Bernoulli { p: 0.4 } },
            Covariate { name: "W2".into(), distribution: Distribution::Uniform { low: 0.0, high: 1.0 } },
            Covariate {
                name: "W3".into(),
                distribution: Distribution::Normal { mean: 0.0, sd: 1.0, clip_low: Some(-3.0), clip_high: Some(3.0) },
            },
        ];
        Self::new(
            covariates,
            "-0.4 + 0.8*W1 + 0.6*W2 - 0.3*W3".parse().expect("valid expression"),
            "-1.2 + 0.9*A + 0.5*W1 - 0.7*W2 + 0.4*W3 + 0.4*A*W1".parse().expect("valid expression"),
        )
        .expect("valid design")
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c.name == name)
    }

    pub fn g0(&self, w: &[f64]) -> f64 {
        expit(self.treatment.eval(|v| self.index(v).map_or(f64::NAN, |j| w[j])))
    }

    pub fn q0(&self, a: f64, w: &[f64]) -> f64 {
        expit(self.outcome.eval(|v| if v == TREATMENT { a } else { self.index(v).map_or(f64::NAN, |j| w[j]) }))
    }

    fn draw_w<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.covariates.iter().map(|c| c.distribution.sample(rng)).collect()
    }
}

/// One simulated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSample {
    pub data: AnalysisData,
    pub names: Vec<String>,
}

impl SimSample {
    /// Typed dataset with `Y` (outcome), `A` (treatment) and baseline covariates.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let numeric = |v: &[f64]| ColumnData::Numeric(v.iter().map(|x| Some(*x)).collect());
        let mut cols = vec![
            Column {
                spec: ColumnSpec::new(OUTCOME, Role::Outcome, Timing::PostTreatment, Kind::Binary),
                data: numeric(&self.data.y),
            },
            Column {
                spec: ColumnSpec::new(TREATMENT, Role::Treatment, Timing::Baseline, Kind::Binary),
                data: numeric(&self.data.a),
            },
        ];
        for (j, name) in self.names.iter().enumerate() {
            cols.push(Column {
                spec: ColumnSpec::new(name, Role::Covariate, Timing::Baseline, Kind::Continuous),
                data: numeric(&self.data.w.column(j)),
            });
        }
        Dataset::from_columns(cols)
    }
}

pub fn generate(dgp: &DgpSpec, n: usize, seed: u64) -> Result<SimSample> {
    dgp.check()?;
    if n == 0 {
        return Err(Error::NoData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = dgp.covariates.len();
    let mut w = Vec::with_capacity(n * p);
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let wi = dgp.draw_w(&mut rng);
        let ai = f64::from(u8::from(rng.random::<f64>() < dgp.g0(&wi)));
        let yi = f64::from(u8::from(rng.random::<f64>() < dgp.q0(ai, &wi)));
        w.extend_from_slice(&wi);
        a.push(ai);
        y.push(yi);
    }
    let names: Vec<String> = dgp.covariates.iter().map(|c| c.name.clone()).collect();
    let w = Matrix::new(n, p, w, names.clone())?;
    Ok(SimSample {
        data: AnalysisData::new(y, a, w)?,
        names,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleTruth {
    pub rd: f64,
    pub rd_mc_se: f64,
    pub mu1: f64,
    pub mu0: f64,
    pub rr: f64,
    pub or: f64,
    pub mc_size: usize,
    pub seed: u64,
}

/// Monte-Carlo average of `Q0(1, W) - Q0(0, W)` over fresh covariate draws.
pub fn true_psi(dgp: &DgpSpec, mc_size: usize, seed: u64) -> Result<OracleTruth> {
    dgp.check()?;
    if mc_size < MIN_MC_SIZE {
        return Err(Error::Dgp(format!("mc_size must be at least {MIN_MC_SIZE}, got {mc_size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s0, mut sd, mut sdd) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..mc_size {
        let w = dgp.draw_w(&mut rng);
        let (q1, q0) = (dgp.q0(1.0, &w), dgp.q0(0.0, &w));
        s1 += q1;
        s0 += q0;
        sd += q1 - q0;
        sdd += (q1 - q0) * (q1 - q0);
    }
    let m = mc_size as f64;
    let (mu1, mu0) = (s1 / m, s0 / m);
    let rd = sd / m;
    let var = (sdd - m * rd * rd) / (m - 1.0);
    Ok(OracleTruth {
        rd,
        rd_mc_se: sqrt(var.max(0.0) / m),
        mu1,
        mu0,
        rr: mu1 / mu0,
        or: mu1 * (1.0 - mu0) / (mu0 * (1.0 - mu1)),
        mc_size,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimatorKind {
    Tmle,
    Gcomp,
    /// The true risk difference itself.
    Oracle,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Tmle => "tmle",
            EstimatorKind::Gcomp => "gcomp",
            EstimatorKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub name: String,
    pub kind: EstimatorKind,
    pub tmle: TmleConfig,
}

impl EstimatorConfig {
    pub fn new(name: &str, kind: EstimatorKind, q_library: Vec<LearnerSpec>, g_library: Vec<LearnerSpec>) -> Self {
        Self {
            name: name.into(),
            kind,
            tmle: TmleConfig::new(q_library, g_library),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicateEstimate {
    pub estimate: f64,
    pub se: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Mean of the risk-difference influence curve (TMLE only).
    pub mean_ic: Option<f64>,
}

/// Draws replicate `seed` and applies every estimator to it.
pub fn run_replicate(
    dgp: &DgpSpec,
    n: usize,
    seed: u64,
    estimators: &[EstimatorConfig],
    truth: &OracleTruth,
) -> Result<Vec<ReplicateEstimate>> {
    let fail = |e: Error| Error::Replicate { seed, message: e.to_string() };
    let sample = generate(dgp, n, seed).map_err(fail)?;
    let data = &sample.data;
    estimators
        .iter()
        .map(|est| match est.kind {
            EstimatorKind::Oracle => Ok(ReplicateEstimate {
                estimate: truth.rd,
                se: None,
                lower: None,
                upper: None,
                mean_ic: None,
            }),
            EstimatorKind::Tmle => {
                let r = tmle::run_tmle(data, &est.tmle).map_err(fail)?.result;
                Ok(ReplicateEstimate {
                    estimate: r.rd.estimate,
                    se: Some(r.rd.se),
                    lower: Some(r.rd.lower),
                    upper: Some(r.rd.upper),
                    mean_ic: Some(r.mean_ic_rd),
                })
            }
            EstimatorKind::Gcomp => {
                let c = &est.tmle;
                let folds = crate::super_learner::make_folds(n, c.folds, c.seed, c.stratify.then_some(("outcome", data.y.as_slice())))
                    .map_err(fail)?;
                let q = crate::super_learner::fit_super_learner(
                    &c.q_library,
                    &tmle::outcome_design(&data.a, &data.w).map_err(fail)?,
                    &data.y,
                    &folds,
                    c.loss,
                )
                .map_err(fail)?;
                let q1 = q.predict(&tmle::counterfactual_design(&data.w, 1.0).map_err(fail)?).map_err(fail)?;
                let q0 = q.predict(&tmle::counterfactual_design(&data.w, 0.0).map_err(fail)?).map_err(fail)?;
                Ok(ReplicateEstimate {
                    estimate: tmle::gcomp_estimate(&q1, &q0),
                    se: None,
                    lower: None,
                    upper: None,
                    mean_ic: None,
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorSummary {
    pub name: String,
    pub kind: EstimatorKind,
    pub reps: usize,
    pub mean_estimate: f64,
    pub mean_bias: f64,
    /// Absent with a single replicate.
    pub sd: Option<f64>,
    pub mean_se: Option<f64>,
    pub coverage: Option<f64>,
    pub mean_ci_width: Option<f64>,
    pub max_abs_mean_ic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicationSummary {
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub truth: OracleTruth,
    pub estimators: Vec<EstimatorSummary>,
}

/// Aggregates `results[r][k]` (replicate `r`, estimator `k`) against the truth.
pub fn summarize(
    n: usize,
    base_seed: u64,
    estimators: &[EstimatorConfig],
    results: &[Vec<ReplicateEstimate>],
    truth: &OracleTruth,
) -> Result<ReplicationSummary> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    let reps = results.len();
    let summaries = estimators
        .iter()
        .enumerate()
        .map(|(k, est)| {
            let col: Vec<&ReplicateEstimate> = results.iter().map(|r| &r[k]).collect();
            let estimates: Vec<f64> = col.iter().map(|r| r.estimate).collect();
            let mean_estimate = mean(&estimates);
            let ses: Option<Vec<f64>> = col.iter().map(|r| r.se).collect();
            let cis: Option<Vec<(f64, f64)>> = col.iter().map(|r| r.lower.zip(r.upper)).collect();
            let ics: Option<Vec<f64>> = col.iter().map(|r| r.mean_ic).collect();
            EstimatorSummary {
                name: est.name.clone(),
                kind: est.kind,
                reps,
                mean_estimate,
                mean_bias: mean_estimate - truth.rd,
                sd: (reps > 1).then(|| sqrt(sample_variance(&estimates))),
                mean_se: ses.map(|s| mean(&s)),
                coverage: cis.as_ref().map(|c| {
                    c.iter().filter(|(l, u)| *l <= truth.rd && truth.rd <= *u).count() as f64 / reps as f64
                }),
                mean_ci_width: cis.map(|c| mean(&c.iter().map(|(l, u)| u - l).collect::<Vec<_>>())),
                max_abs_mean_ic: ics.map(|v| v.iter().fold(0.0, |m, x| clamp(x.abs(), m, f64::INFINITY))),
            }
        })
        .collect();
    Ok(ReplicationSummary {
        n,
        reps,
        base_seed,
        truth: *truth,
        estimators: summaries,
    })
}

/// Sequential replication study; replicate `r` uses seed `base_seed + r`.
pub fn replicate_study(
    dgp: &DgpSpec,
    n: usize,
    reps: usize,
    base_seed: u64,
    estimators: &[EstimatorConfig],
    truth: &OracleTruth,
) -> Result<ReplicationSummary> {
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    let results = (0..reps as u64)
        .map(|r| run_replicate(dgp, n, base_seed.wrapping_add(r), estimators, truth))
        .collect::<Result<Vec<_>>>()?;
    summarize(n, base_seed, estimators, &results, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerKind;

    fn no_w_dgp(outcome: &str) -> DgpSpec {
        DgpSpec::new(
            vec![Covariate { name: "W".into(), distribution: Distribution::Uniform { low: 0.0, high: 1.0 } }],
            "0".parse().unwrap(),
            outcome.parse().unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn expression_parsing() {
        let e: LinearPredictor = "-1.2 + 0.9*A + 0.5*W1 - 0.7*W2 + 0.4*A*W1".parse().unwrap();
        assert_eq!(e.terms.len(), 5);
        assert_eq!(e.terms[0], Term { coef: -1.2, factors: vec![] });
        assert_eq!(e.terms[3], Term { coef: -0.7, factors: vec!["W2".into()] });
        assert_eq!(e.terms[4].factors, vec!["A".to_string(), "W1".to_string()]);
        let v = e.eval(|n| match n {
            "A" => 1.0,
            "W1" => 1.0,
            _ => 0.5,
        });
        assert!((v - (-1.2 + 0.9 + 0.5 - 0.35 + 0.4)).abs() < 1e-15);
        let sci: LinearPredictor = "1e-3*W - 2.5E+1".parse().unwrap();
        assert_eq!(sci.terms[0].coef, 1e-3);
        assert_eq!(sci.terms[1].coef, -25.0);
        assert!("0.5 + ".parse::<LinearPredictor>().is_err());
        assert!("0.5 + 3$".parse::<LinearPredictor>().is_err());
        let round: LinearPredictor = e.to_string().parse().unwrap();
        assert_eq!(round, e);
    }

    #[test]
    fn undeclared_variables_rejected() {
        let bad = DgpSpec::new(vec![], "W9".parse().unwrap(), "0".parse().unwrap());
        assert!(matches!(bad, Err(Error::Dgp(_))));
        let bad_a = DgpSpec::new(vec![], "A".parse().unwrap(), "0".parse().unwrap());
        assert!(bad_a.is_err());
        let bad_p = DgpSpec::new(
            vec![Covariate { name: "W".into(), distribution: Distribution::Bernoulli { p: 1.5 } }],
            "0".parse().unwrap(),
            "0".parse().unwrap(),
        );
        assert!(bad_p.is_err());
    }

    #[test]
    fn balanced_treatment_fraction() {
        let dgp = no_w_dgp("0");
        let s = generate(&dgp, 10_000, 3).unwrap();
        let frac = mean(&s.data.a);
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn generation_is_seeded() {
        let dgp = DgpSpec::dgp_a();
        assert_eq!(generate(&dgp, 200, 7).unwrap(), generate(&dgp, 200, 7).unwrap());
        assert_ne!(generate(&dgp, 200, 7).unwrap(), generate(&dgp, 200, 8).unwrap());
        let w3 = generate(&dgp, 5000, 1).unwrap().data.w.column(2);
        assert!(w3.iter().all(|v| (-3.0..=3.0).contains(v)));
    }

    #[test]
    fn closed_form_truth_without_covariates() {
        let dgp = no_w_dgp("-1 + 0.8*A");
        let t = true_psi(&dgp, MIN_MC_SIZE, 42).unwrap();
        let exact = expit(-0.2) - expit(-1.0);
        assert!((exact - 0.181_225).abs() < 1e-6);
        // The draws do not matter here, so the MC standard error is zero up to rounding.
        assert!((t.rd - exact).abs() <= 3.0 * t.rd_mc_se + 1e-12);
    }

    #[test]
    fn null_design_truth_is_zero() {
        let dgp = no_w_dgp("-1 + 0.5*W");
        let t = true_psi(&dgp, MIN_MC_SIZE, 1).unwrap();
        assert!(t.rd.abs() <= 3.0 * t.rd_mc_se + 1e-12);
        assert!(true_psi(&dgp, 10, 1).is_err());
    }

    #[test]
    fn null_design_stratified_difference_is_small() {
        let dgp = no_w_dgp("-1 + 0.5*W");
        let s = generate(&dgp, 20_000, 5).unwrap();
        let (mut t, mut c) = ((0.0, 0.0), (0.0, 0.0));
        for i in 0..20_000 {
            let slot = if s.data.a[i] == 1.0 { &mut t } else { &mut c };
            slot.0 += s.data.y[i];
            slot.1 += 1.0;
        }
        assert!((t.0 / t.1 - c.0 / c.1).abs() < 0.03);
    }

    #[test]
    fn oracle_estimator_has_zero_bias() {
        let dgp = DgpSpec::dgp_a();
        let truth = true_psi(&dgp, MIN_MC_SIZE, 42).unwrap();
        let est = [EstimatorConfig::new("oracle", EstimatorKind::Oracle, vec![], vec![])];
        let s = replicate_study(&dgp, 50, 3, 1, &est, &truth).unwrap();
        assert_eq!(s.estimators[0].mean_bias, 0.0);
        assert_eq!(s.estimators[0].coverage, None);
        let one = replicate_study(&dgp, 50, 1, 1, &est, &truth).unwrap();
        assert_eq!(one.estimators[0].sd, None);
    }

    #[test]
    fn failing_replicate_reports_its_seed() {
        let dgp = no_w_dgp("0");
        let truth = true_psi(&dgp, MIN_MC_SIZE, 1).unwrap();
        let lib = vec![LearnerSpec::of(LearnerKind::Logistic)];
        // 30 folds cannot be built from 10 rows.
        let mut est = EstimatorConfig::new("tmle", EstimatorKind::Tmle, lib.clone(), lib);
        est.tmle.folds = 30;
        let err = replicate_study(&dgp, 10, 2, 100, &[est], &truth).unwrap_err();
        assert!(matches!(err, Error::Replicate { seed: 100, .. }), "{err:?}");
    }

    #[test]
    fn dataset_roundtrip() {
        let s = generate(&DgpSpec::dgp_a(), 20, 2).unwrap();
        let ds = s.to_dataset().unwrap();
        let names: Vec<String> = s.names.clone();
        assert_eq!(ds.analysis_data(&names).unwrap(), s.data);
    }
}
