//! Base prediction algorithms for the super learner library.
//!
//! Every learner is addressed by a spec string such as `logistic`,
//! `lasso_logistic` or `boosted_stumps:rounds=200,lr=0.05`. Hyperparameters are
//! validated when the learner string is parsed. Fitting is deterministic; logistic-family
//! learners accept an offset on the linear predictor.

pub mod glm;
pub mod lasso;
pub mod spline;
pub mod stumps;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math::{bernoulli_nll_eta, clamp, expit, weighted_mean, PROB_CLIP};
use crate::{Error, Matrix, Result};
use glm::{logistic_irls, IrlsOptions};
use spline::SplineBasis;
use stumps::StumpEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Loss {
    SquaredError,
    /// Bernoulli negative log-likelihood on predictions clipped to `[1e-6, 1 - 1e-6]`.
    NegLogLik,
}

impl Loss {
    pub fn eval(self, y: f64, pred: f64) -> f64 {
        match self {
            Loss::SquaredError => (y - pred) * (y - pred),
            Loss::NegLogLik => {
                let p = clamp(pred, PROB_CLIP, 1.0 - PROB_CLIP);
                -(y * libm::log(p) + (1.0 - y) * libm::log1p(-p))
            }
        }
    }

    /// Derivative of [`Loss::eval`] with respect to the prediction.
    pub fn derivative(self, y: f64, pred: f64) -> f64 {
        match self {
            Loss::SquaredError => 2.0 * (pred - y),
            Loss::NegLogLik => {
                if !(PROB_CLIP..=1.0 - PROB_CLIP).contains(&pred) {
                    return 0.0;
                }
                -y / pred + (1.0 - y) / (1.0 - pred)
            }
        }
    }

    pub fn mean(self, y: &[f64], pred: &[f64]) -> f64 {
        y.iter().zip(pred).map(|(y, p)| self.eval(*y, *p)).sum::<f64>() / y.len() as f64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::SquaredError => "squared_error",
            Loss::NegLogLik => "nll",
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_error" | "mse" => Ok(Loss::SquaredError),
            "nll" | "negative_log_likelihood" => Ok(Loss::NegLogLik),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    InterceptOnly,
    Linear,
    Logistic,
    LassoLogistic,
    SplineLogistic,
    BoostedStumps,
    /// Cell means over distinct covariate vectors (saturated for discrete covariates).
    Stratified,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::InterceptOnly => "intercept_only",
            LearnerKind::Linear => "linear",
            LearnerKind::Logistic => "logistic",
            LearnerKind::LassoLogistic => "lasso_logistic",
            LearnerKind::SplineLogistic => "spline_logistic",
            LearnerKind::BoostedStumps => "boosted_stumps",
            LearnerKind::Stratified => "stratified",
        }
    }

    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            LearnerKind::InterceptOnly | LearnerKind::Linear | LearnerKind::Stratified => &[],
            LearnerKind::Logistic => &[("interact_first", 0.0)],
            LearnerKind::LassoLogistic => &[
                ("nlambda", 50.0),
                ("lambda_ratio", 1e-3),
                ("cv_folds", 5.0),
                ("interact_first", 0.0),
            ],
            LearnerKind::SplineLogistic => &[("knots", 3.0), ("interact_first", 0.0)],
            LearnerKind::BoostedStumps => {
                &[("rounds", 100.0), ("lr", 0.1), ("min_leaf", 5.0), ("max_depth", 1.0)]
            }
        }
    }

    fn is_probability(self) -> bool {
        matches!(
            self,
            LearnerKind::Logistic | LearnerKind::LassoLogistic | LearnerKind::SplineLogistic | LearnerKind::BoostedStumps
        )
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "intercept_only" | "mean" => LearnerKind::InterceptOnly,
            "linear" => LearnerKind::Linear,
            "logistic" => LearnerKind::Logistic,
            "lasso_logistic" | "lasso" => LearnerKind::LassoLogistic,
            "spline_logistic" | "gam" => LearnerKind::SplineLogistic,
            "boosted_stumps" => LearnerKind::BoostedStumps,
            "stratified" => LearnerKind::Stratified,
            other => return Err(Error::LearnerSpec(format!("unknown learner `{other}`"))),
        })
    }
}

/// A learner kind plus validated hyperparameters (defaults filled in).
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    params: BTreeMap<String, f64>,
}

fn is_integer(v: f64) -> bool {
    v.is_finite() && libm::floor(v) == v
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, overrides: &[(&str, f64)]) -> Result<Self> {
        let mut params: BTreeMap<String, f64> =
            kind.defaults().iter().map(|(k, v)| ((*k).to_string(), *v)).collect();
        for (k, v) in overrides {
            match params.get_mut(*k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(Error::LearnerSpec(format!(
                        "`{}` does not take hyperparameter `{k}`",
                        kind.as_str()
                    )))
                }
            }
        }
        let spec = Self { kind, params };
        spec.check()?;
        Ok(spec)
    }

    pub fn of(kind: LearnerKind) -> Self {
        Self::new(kind, &[]).expect("defaults are valid")
    }

    fn check(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::LearnerSpec(format!("{}: `{k}` {why}", self.kind.as_str())));
        for (k, &v) in &self.params {
            let ok = match k.as_str() {
                "interact_first" => v == 0.0 || v == 1.0,
                "nlambda" | "cv_folds" => is_integer(v) && v >= 1.0,
                "knots" | "min_leaf" | "rounds" => is_integer(v) && v >= 0.0,
                "lambda_ratio" => v > 0.0 && v < 1.0,
                "lr" => v > 0.0 && v <= 1.0,
                "max_depth" => v == 1.0,
                _ => true,
            };
            if !ok {
                return bad(k, &format!("has invalid value {v}"));
            }
        }
        if self.kind == LearnerKind::LassoLogistic && self.param("cv_folds") < 2.0 {
            return bad("cv_folds", "must be at least 2");
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(f64::NAN)
    }

    fn uparam(&self, key: &str) -> usize {
        self.param(key) as usize
    }

    fn interact(&self) -> bool {
        self.params.get("interact_first").copied() == Some(1.0)
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    /// `kind` or `kind:key=value,key=value`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let kind: LearnerKind = kind.parse()?;
        let mut overrides: Vec<(&str, f64)> = Vec::new();
        if let Some(rest) = rest {
            for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::LearnerSpec(format!("expected key=value, got `{part}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::LearnerSpec(format!("`{}` is not a number", v.trim())))?;
                overrides.push((k.trim(), v));
            }
        }
        LearnerSpec::new(kind, &overrides)
    }
}

impl fmt::Display for LearnerSpec {
    /// Canonical form: kind followed by every non-default hyperparameter.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())?;
        let mut first = true;
        for (k, d) in self.kind.defaults() {
            let v = self.param(k);
            if v != *d {
                write!(f, "{}{k}={v}", if first { ":" } else { "," })?;
                first = false;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Constant { mean: f64 },
    Linear { coef: Vec<f64> },
    Logistic { coef: Vec<f64> },
    Spline { basis: SplineBasis, coef: Vec<f64> },
    Stumps(StumpEnsemble),
    Stratified { cells: BTreeMap<Vec<u64>, f64>, fallback: f64 },
}

/// A fitted learner. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerFit {
    pub spec: LearnerSpec,
    pub model: Model,
    /// Weighted mean training loss: NLL for probability learners, squared error otherwise.
    pub training_loss: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub n_features: usize,
}

/// Appends the products of the first column with every other column.
fn with_first_interactions(x: &Matrix) -> Result<Matrix> {
    if x.ncols() < 2 {
        return Ok(x.clone());
    }
    let first = x.column(0);
    let cols: Vec<Vec<f64>> = (1..x.ncols())
        .map(|j| (0..x.nrows()).map(|i| first[i] * x.get(i, j)).collect())
        .collect();
    let names = (1..x.ncols())
        .map(|j| format!("{}:{}", x.names()[0], x.names()[j]))
        .collect();
    x.hstack(&Matrix::from_columns(&cols, names)?)
}

fn cell_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Fits `spec` to `(x, y)`.
pub fn fit(
    spec: &LearnerSpec,
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
) -> Result<LearnerFit> {
    glm::check_inputs(x, y, weights, offset)?;
    let kind = spec.kind;
    if kind.is_probability() {
        glm::check_binary(y)?;
    }
    if offset.is_some() && !matches!(kind, LearnerKind::Logistic | LearnerKind::LassoLogistic | LearnerKind::SplineLogistic | LearnerKind::Linear) {
        return Err(Error::InvalidArgument(format!("`{}` does not support an offset", kind.as_str())));
    }
    let mut warnings = Vec::new();
    let mut converged = true;
    let design = if spec.interact() { with_first_interactions(x)? } else { x.clone() };
    let model = match kind {
        LearnerKind::InterceptOnly => Model::Constant {
            mean: weighted_mean(y, weights),
        },
        LearnerKind::Linear => {
            let f = glm::linear_wls(&design, y, weights, offset, true)?;
            warnings.extend(f.warnings);
            Model::Linear { coef: f.coef }
        }
        LearnerKind::Logistic => {
            let f = logistic_irls(&design, y, weights, offset, IrlsOptions::default())?;
            converged = f.converged;
            warnings.extend(f.warnings);
            Model::Logistic { coef: f.coef }
        }
        LearnerKind::LassoLogistic => {
            let cv = lasso::cv_lasso_logistic(
                &design,
                y,
                weights,
                offset,
                spec.uparam("nlambda"),
                spec.param("lambda_ratio"),
                spec.uparam("cv_folds"),
            )?;
            converged = cv.converged;
            if !converged {
                warnings.push(format!("lasso did not converge at lambda {}", cv.lambda));
            }
            Model::Logistic { coef: cv.coef }
        }
        LearnerKind::SplineLogistic => {
            let basis = SplineBasis::fit(&design, spec.uparam("knots"));
            let expanded = basis.expand(&design)?;
            let f = logistic_irls(&expanded, y, weights, offset, IrlsOptions::default())?;
            converged = f.converged;
            warnings.extend(f.warnings);
            Model::Spline { basis, coef: f.coef }
        }
        LearnerKind::BoostedStumps => Model::Stumps(stumps::fit_stumps(
            &design,
            y,
            weights,
            spec.uparam("rounds"),
            spec.param("lr"),
            spec.uparam("min_leaf"),
        )),
        LearnerKind::Stratified => {
            let mut acc: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
            for i in 0..x.nrows() {
                let wi = weights.map_or(1.0, |w| w[i]);
                let e = acc.entry(cell_key(design.row(i))).or_insert((0.0, 0.0));
                e.0 += wi * y[i];
                e.1 += wi;
            }
            let fallback = weighted_mean(y, weights);
            let cells = acc
                .into_iter()
                .map(|(k, (s, w))| (k, if w > 0.0 { s / w } else { fallback }))
                .collect();
            Model::Stratified { cells, fallback }
        }
    };
    let mut fit = LearnerFit {
        spec: spec.clone(),
        model,
        training_loss: 0.0,
        converged,
        warnings,
        n_features: x.ncols(),
    };
    let pred = predict_with_offset(&fit, x, offset)?;
    let loss = if kind.is_probability() { Loss::NegLogLik } else { Loss::SquaredError };
    let sw = weights.map_or(y.len() as f64, |w| w.iter().sum());
    fit.training_loss = (0..y.len())
        .map(|i| weights.map_or(1.0, |w| w[i]) * loss.eval(y[i], pred[i]))
        .sum::<f64>()
        / sw;
    Ok(fit)
}

/// Predictions on the response scale; raw (unclipped).
pub fn predict(fit: &LearnerFit, x: &Matrix) -> Result<Vec<f64>> {
    predict_with_offset(fit, x, None)
}

pub fn predict_with_offset(fit: &LearnerFit, x: &Matrix, offset: Option<&[f64]>) -> Result<Vec<f64>> {
    x.check_cols(fit.n_features)?;
    let off = |i: usize| offset.map_or(0.0, |o| o[i]);
    let design = if fit.spec.interact() { with_first_interactions(x)? } else { x.clone() };
    Ok(match &fit.model {
        Model::Constant { mean } => alloc::vec![*mean; x.nrows()],
        Model::Linear { coef } => crate::matrix::linear_predictor(&design, true, coef)
            .into_iter()
            .enumerate()
            .map(|(i, e)| e + off(i))
            .collect(),
        Model::Logistic { coef } => crate::matrix::linear_predictor(&design, true, coef)
            .into_iter()
            .enumerate()
            .map(|(i, e)| expit(e + off(i)))
            .collect(),
        Model::Spline { basis, coef } => crate::matrix::linear_predictor(&basis.expand(&design)?, true, coef)
            .into_iter()
            .enumerate()
            .map(|(i, e)| expit(e + off(i)))
            .collect(),
        Model::Stumps(ens) => (0..x.nrows()).map(|i| expit(ens.decision(design.row(i)))).collect(),
        Model::Stratified { cells, fallback } => (0..x.nrows())
            .map(|i| cells.get(&cell_key(design.row(i))).copied().unwrap_or(*fallback))
            .collect(),
    })
}

/// Mean binomial log-loss of a linear predictor; exposed for gradient checks.
pub fn nll_of_eta(y: &[f64], eta: &[f64]) -> f64 {
    y.iter().zip(eta).map(|(y, e)| bernoulli_nll_eta(*y, *e)).sum::<f64>() / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random::<f64>() * 4.0 - 2.0, f64::from(u8::from(rng.random::<bool>())), rng.random::<f64>()])
            .collect();
        let y = rows
            .iter()
            .map(|r| f64::from(u8::from(rng.random::<f64>() < expit(-0.3 + r[0] * r[0] * 0.5 - r[1] + r[2]))))
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn spec_parsing() {
        let s: LearnerSpec = "boosted_stumps:rounds=200,lr=0.05".parse().unwrap();
        assert_eq!(s.kind, LearnerKind::BoostedStumps);
        assert_eq!(s.param("rounds"), 200.0);
        assert_eq!(s.to_string(), "boosted_stumps:rounds=200,lr=0.05");
        assert_eq!("logistic".parse::<LearnerSpec>().unwrap().to_string(), "logistic");
        assert!("boosted_stumps:max_depth=2".parse::<LearnerSpec>().is_err());
        assert!("logistic:rounds=3".parse::<LearnerSpec>().is_err());
        assert!("bart".parse::<LearnerSpec>().is_err());
        assert!("lasso_logistic:lambda_ratio=2".parse::<LearnerSpec>().is_err());
        let zero: LearnerSpec = "boosted_stumps:rounds=0".parse().unwrap();
        assert_eq!(zero.param("rounds"), 0.0);
    }

    #[test]
    fn intercept_only_zero_predicts_half() {
        let x = Matrix::from_rows(&[vec![1.0], vec![5.0]]).unwrap();
        let fit = LearnerFit {
            spec: LearnerSpec::of(LearnerKind::Logistic),
            model: Model::Logistic { coef: vec![0.0, 0.0] },
            training_loss: 0.0,
            converged: true,
            warnings: vec![],
            n_features: 1,
        };
        assert_eq!(predict(&fit, &x).unwrap(), vec![0.5, 0.5]);
        let other = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(predict(&fit, &other), Err(Error::Dimension(_))));
    }

    #[test]
    fn logistic_intercept_only_fit() {
        let y = [1.0, 0.0, 1.0, 1.0];
        let fit = super::fit(&LearnerSpec::of(LearnerKind::Logistic), &Matrix::empty(4), &y, None, None).unwrap();
        match &fit.model {
            Model::Logistic { coef } => assert!((coef[0] - 1.0986122886681098).abs() < 1e-12),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn linear_exact_interpolation() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let fit = super::fit(&LearnerSpec::of(LearnerKind::Linear), &x, &[0.0, 2.0, 4.0], None, None).unwrap();
        let Model::Linear { coef } = &fit.model else { panic!() };
        assert!(coef[0].abs() < 1e-12 && (coef[1] - 2.0).abs() < 1e-12);
        assert!(fit.training_loss < 1e-20);
    }

    #[test]
    fn separated_logistic_keeps_finite_predictions() {
        let x = Matrix::from_rows(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]).unwrap();
        let fit = super::fit(&LearnerSpec::of(LearnerKind::Logistic), &x, &[0.0, 0.0, 1.0, 1.0], None, None).unwrap();
        assert!(!fit.converged);
        assert!(!fit.warnings.is_empty());
        let p = predict(&fit, &x).unwrap();
        assert!(p.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert!(fit.training_loss.is_finite());
    }

    #[test]
    fn zero_round_boosting_is_base_rate() {
        let (x, y) = random_data(60, 3);
        let spec: LearnerSpec = "boosted_stumps:rounds=0".parse().unwrap();
        let fit = super::fit(&spec, &x, &y, None, None).unwrap();
        let rate = y.iter().sum::<f64>() / 60.0;
        for p in predict(&fit, &x).unwrap() {
            assert!((p - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn boosting_reduces_training_loss() {
        let (x, y) = random_data(200, 4);
        let null = super::fit(&"boosted_stumps:rounds=0".parse().unwrap(), &x, &y, None, None).unwrap();
        let boosted = super::fit(&"boosted_stumps:rounds=100".parse().unwrap(), &x, &y, None, None).unwrap();
        assert!(boosted.training_loss < null.training_loss);
    }

    #[test]
    fn refit_is_bit_identical() {
        let (x, y) = random_data(120, 5);
        for s in ["logistic", "lasso_logistic", "spline_logistic", "boosted_stumps", "linear", "stratified"] {
            let spec: LearnerSpec = s.parse().unwrap();
            let a = predict(&super::fit(&spec, &x, &y, None, None).unwrap(), &x).unwrap();
            let b = predict(&super::fit(&spec, &x, &y, None, None).unwrap(), &x).unwrap();
            assert_eq!(a, b, "{s}");
        }
    }

    #[test]
    fn row_permutation_invariance() {
        let (x, y) = random_data(150, 6);
        let perm: Vec<usize> = (0..150).rev().collect();
        let xp = x.select_rows(&perm);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        for s in ["logistic", "lasso_logistic", "spline_logistic", "boosted_stumps:rounds=50", "linear", "intercept_only", "stratified"] {
            let spec: LearnerSpec = s.parse().unwrap();
            let a = predict(&super::fit(&spec, &x, &y, None, None).unwrap(), &x).unwrap();
            let b = predict(&super::fit(&spec, &xp, &yp, None, None).unwrap(), &x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-9, "{s}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn spline_without_interior_knots_is_logistic() {
        let (x, y) = random_data(150, 7);
        let a = super::fit(&"spline_logistic:knots=0".parse().unwrap(), &x, &y, None, None).unwrap();
        let b = super::fit(&LearnerSpec::of(LearnerKind::Logistic), &x, &y, None, None).unwrap();
        let (Model::Spline { coef: ca, .. }, Model::Logistic { coef: cb }) = (&a.model, &b.model) else { panic!() };
        assert_eq!(ca.len(), cb.len());
        for (u, v) in ca.iter().zip(cb) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn spline_captures_curvature() {
        let (x, y) = random_data(400, 8);
        let s = super::fit(&"spline_logistic".parse().unwrap(), &x, &y, None, None).unwrap();
        let l = super::fit(&LearnerSpec::of(LearnerKind::Logistic), &x, &y, None, None).unwrap();
        assert!(s.training_loss < l.training_loss);
    }

    #[test]
    fn stratified_gives_cell_means() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let y = [1.0, 0.0, 1.0, 1.0, 0.0];
        let fit = super::fit(&LearnerSpec::of(LearnerKind::Stratified), &x, &y, None, None).unwrap();
        let p = predict(&fit, &Matrix::from_rows(&[vec![0.0], vec![1.0], vec![7.0]]).unwrap()).unwrap();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[2] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn interactions_with_first_column() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 4.0, 5.0]]).unwrap();
        let e = with_first_interactions(&x).unwrap();
        assert_eq!(e.row(0), &[1.0, 2.0, 3.0, 2.0, 3.0]);
        assert_eq!(e.row(1), &[0.0, 4.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn offsets_only_for_glm_kinds() {
        let (x, y) = random_data(30, 9);
        let off = vec![0.1; 30];
        assert!(super::fit(&LearnerSpec::of(LearnerKind::BoostedStumps), &x, &y, None, Some(&off)).is_err());
        assert!(super::fit(&LearnerSpec::of(LearnerKind::Logistic), &x, &y, None, Some(&off)).is_ok());
    }

    #[test]
    fn loss_clipping() {
        assert!(Loss::NegLogLik.eval(1.0, 0.0).is_finite());
        assert!((Loss::NegLogLik.eval(1.0, 0.0) - (-(1e-6f64).ln())).abs() < 1e-9);
        assert_eq!(Loss::SquaredError.eval(1.0, 0.5), 0.25);
    }
}
