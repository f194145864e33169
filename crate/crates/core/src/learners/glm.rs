//! Logistic IRLS and weighted least squares.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::math::{bernoulli_nll_eta, clamp, expit, logit, weighted_mean};
use crate::matrix::{linear_predictor, solve_spd, weighted_normal_equations};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub intercept: bool,
    pub max_iter: usize,
    /// Relative deviance change `|dev - dev_old| / (|dev| + 0.1)`.
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            intercept: true,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    /// Intercept first when the fit has one.
    pub coef: Vec<f64>,
    pub intercept: bool,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
    pub warnings: Vec<String>,
}

impl GlmFit {
    pub fn linear_predictor(&self, x: &Matrix) -> Vec<f64> {
        linear_predictor(x, self.intercept, &self.coef)
    }
}

pub(crate) fn check_inputs(x: &Matrix, y: &[f64], weights: Option<&[f64]>, offset: Option<&[f64]>) -> Result<()> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Dimension(alloc::format!("{} responses for {n} rows", y.len())));
    }
    if n == 0 {
        return Err(Error::NoData);
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::Dimension(alloc::format!("{} weights for {n} rows", w.len())));
        }
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
    }
    if let Some(o) = offset {
        if o.len() != n {
            return Err(Error::Dimension(alloc::format!("{} offsets for {n} rows", o.len())));
        }
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("offset contains non-finite values".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) || (0..n).any(|i| x.row(i).iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("non-finite values in the training data".into()));
    }
    Ok(())
}

pub(crate) fn check_binary(y: &[f64]) -> Result<()> {
    if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "response {} at row {} is not binary",
            y[i],
            i + 1
        )));
    }
    Ok(())
}

fn deviance(y: &[f64], w: &[f64], eta: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(w)
        .zip(eta)
        .map(|((y, w), e)| if *w == 0.0 { 0.0 } else { w * bernoulli_nll_eta(*y, *e) })
        .sum::<f64>()
}

fn add_offset(mut eta: Vec<f64>, offset: Option<&[f64]>) -> Vec<f64> {
    if let Some(o) = offset {
        for (e, o) in eta.iter_mut().zip(o) {
            *e += o;
        }
    }
    eta
}

/// Maximum-likelihood logistic regression by Newton-Raphson (IRLS) with step halving.
///
/// Convergence requires the relative deviance change to fall below `tol` with
/// a vanishing last step. Under separation the deviance still flattens but
/// the coefficients keep growing; that case returns `converged = false` with
/// finite fitted values.
pub fn logistic_irls(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    opts: IrlsOptions,
) -> Result<GlmFit> {
    check_inputs(x, y, weights, offset)?;
    if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("logistic responses must lie in [0, 1]".into()));
    }
    let n = x.nrows();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let k = x.ncols() + usize::from(opts.intercept);
    let mut beta = vec![0.0; k];
    if opts.intercept && offset.is_none() {
        beta[0] = logit(clamp(weighted_mean(y, Some(w)), 1e-6, 1.0 - 1e-6));
    }
    let mut warnings = Vec::new();
    let mut eta = add_offset(linear_predictor(x, opts.intercept, &beta), offset);
    let mut dev = deviance(y, w, &eta);
    let mut converged = false;
    let mut jittered = false;
    let mut iterations = 0;
    if k == 0 {
        return Ok(GlmFit {
            coef: beta,
            intercept: opts.intercept,
            converged: true,
            iterations: 0,
            deviance: dev,
            warnings,
        });
    }

    while iterations < opts.max_iter {
        iterations += 1;
        let p: Vec<f64> = eta.iter().map(|e| expit(*e)).collect();
        let wz: Vec<f64> = (0..n).map(|i| w[i] * p[i] * (1.0 - p[i])).collect();
        // Newton system: (Xᵀ W X) Δ = Xᵀ w (y - p); use z = (y - p) / (p(1-p)) so that
        // the shared normal-equation builder yields the score on the right-hand side.
        let z: Vec<f64> = (0..n)
            .map(|i| if wz[i] > 0.0 { w[i] * (y[i] - p[i]) / wz[i] } else { 0.0 })
            .collect();
        let (info, score) = weighted_normal_equations(x, opts.intercept, &wz, &z);
        let Some((delta, jit)) = solve_spd(&info, &score) else {
            warnings.push("information matrix is not invertible".into());
            break;
        };
        jittered |= jit;
        let mut step = 1.0;
        let mut new_beta: Vec<f64>;
        let mut new_eta: Vec<f64>;
        let mut new_dev;
        let mut halvings = 0;
        loop {
            new_beta = beta.iter().zip(delta.iter()).map(|(b, d)| b + step * d).collect();
            new_eta = add_offset(linear_predictor(x, opts.intercept, &new_beta), offset);
            new_dev = deviance(y, w, &new_eta);
            if new_dev.is_finite() && new_dev <= dev + 1e-12 * dev.abs() || halvings >= 30 {
                break;
            }
            step *= 0.5;
            halvings += 1;
        }
        let max_step = delta.iter().map(|d| (step * d).abs()).fold(0.0, f64::max);
        let max_beta = new_beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
        let change = (new_dev - dev).abs() / (new_dev.abs() + 0.1);
        beta = new_beta;
        eta = new_eta;
        dev = new_dev;
        if change < opts.tol {
            converged = max_step <= 1e-4 * (1.0 + max_beta);
            if !converged {
                warnings.push("fitted probabilities numerically 0 or 1 (separation); coefficients diverging".into());
            }
            break;
        }
    }
    if iterations >= opts.max_iter && !converged && warnings.is_empty() {
        warnings.push(alloc::format!("IRLS did not converge in {} iterations", opts.max_iter));
    }
    if jittered {
        warnings.push("singular design: ridge jitter applied".into());
    }
    Ok(GlmFit {
        coef: beta,
        intercept: opts.intercept,
        converged,
        iterations,
        deviance: dev,
        warnings,
    })
}

/// Weighted least squares, with ridge jitter on a singular design.
pub fn linear_wls(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    intercept: bool,
) -> Result<GlmFit> {
    check_inputs(x, y, weights, offset)?;
    let n = x.nrows();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let z: Vec<f64> = match offset {
        Some(o) => y.iter().zip(o).map(|(y, o)| y - o).collect(),
        None => y.to_vec(),
    };
    let k = x.ncols() + usize::from(intercept);
    let mut warnings = Vec::new();
    let coef = if k == 0 {
        Vec::new()
    } else {
        let (xtwx, xtwz) = weighted_normal_equations(x, intercept, w, &z);
        let (sol, jit) = solve_spd(&xtwx, &xtwz)
            .ok_or_else(|| Error::InvalidArgument("normal equations could not be solved".into()))?;
        if jit {
            warnings.push("singular design: ridge jitter applied".into());
        }
        sol.iter().copied().collect()
    };
    let fitted = add_offset(linear_predictor(x, intercept, &coef), offset);
    let rss = (0..n).map(|i| w[i] * (y[i] - fitted[i]) * (y[i] - fitted[i])).sum();
    Ok(GlmFit {
        coef,
        intercept,
        converged: true,
        iterations: 1,
        deviance: rss,
        warnings,
    })
}

/// Weighted mean Bernoulli negative log-likelihood, `(1/Σw) Σ wᵢ nll(yᵢ, ηᵢ)`.
pub fn logistic_objective(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    intercept: bool,
    beta: &[f64],
) -> f64 {
    let eta = add_offset(linear_predictor(x, intercept, beta), offset);
    let n = y.len();
    let sw = weights.map_or(n as f64, |w| w.iter().sum());
    (0..n)
        .map(|i| weights.map_or(1.0, |w| w[i]) * bernoulli_nll_eta(y[i], eta[i]))
        .sum::<f64>()
        / sw
}

/// Analytic gradient of [`logistic_objective`]: `-(1/Σw) Xᵀ w (y - p)`.
pub fn logistic_gradient(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    intercept: bool,
    beta: &[f64],
) -> Vec<f64> {
    let eta = add_offset(linear_predictor(x, intercept, beta), offset);
    let n = y.len();
    let off = usize::from(intercept);
    let sw = weights.map_or(n as f64, |w| w.iter().sum());
    let mut g = vec![0.0; beta.len()];
    for i in 0..n {
        let r = weights.map_or(1.0, |w| w[i]) * (y[i] - expit(eta[i]));
        if intercept {
            g[0] -= r;
        }
        for (j, xij) in x.row(i).iter().enumerate() {
            g[off + j] -= r * xij;
        }
    }
    for v in &mut g {
        *v /= sw;
    }
    g
}

/// L1-penalized objective (intercept unpenalized).
pub fn lasso_objective(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    intercept: bool,
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let off = usize::from(intercept);
    logistic_objective(x, y, weights, None, intercept, beta)
        + lambda * beta[off..].iter().map(|b| b.abs()).sum::<f64>()
}

/// Gradient of [`lasso_objective`] where every penalized coefficient is non-zero.
pub fn lasso_gradient(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    intercept: bool,
    beta: &[f64],
    lambda: f64,
) -> Vec<f64> {
    let off = usize::from(intercept);
    let mut g = logistic_gradient(x, y, weights, None, intercept, beta);
    for j in off..beta.len() {
        g[j] += lambda * beta[j].signum() * f64::from(u8::from(beta[j] != 0.0));
    }
    g
}

/// Inverse Fisher information of a logistic fit (Wald covariance).
pub fn logistic_covariance(x: &Matrix, weights: Option<&[f64]>, fit: &GlmFit) -> Option<DMatrix<f64>> {
    let eta = fit.linear_predictor(x);
    let n = x.nrows();
    let wz: Vec<f64> = (0..n)
        .map(|i| {
            let p = expit(eta[i]);
            weights.map_or(1.0, |w| w[i]) * p * (1.0 - p)
        })
        .collect();
    let (info, _) = weighted_normal_equations(x, fit.intercept, &wz, &vec![0.0; n]);
    info.try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn intercept_only_is_logit_of_mean() {
        let y = [1.0, 1.0, 1.0, 0.0];
        let fit = logistic_irls(&Matrix::empty(4), &y, None, None, IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        // Independent closed form: logit(0.75) = ln 3.
        assert!((fit.coef[0] - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separated_data_is_flagged() {
        let x = design(&[&[-2.0], &[-1.0], &[1.0], &[2.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let fit = logistic_irls(&x, &y, None, None, IrlsOptions::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.warnings.iter().any(|w| w.contains("separation")));
        let eta = fit.linear_predictor(&x);
        assert!(eta.iter().all(|e| e.is_finite()));
        assert!(eta.iter().map(|e| expit(*e)).all(|p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn score_equations_hold_with_weights_and_offset() {
        let x = design(&[&[0.1, 1.0], &[0.5, 0.0], &[-0.3, 1.0], &[1.2, 0.0], &[0.7, 1.0], &[-1.0, 0.0], &[0.0, 1.0], &[2.0, 0.0]]);
        let y = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let w = [1.0, 2.0, 0.5, 1.0, 1.5, 1.0, 3.0, 1.0];
        let off = [0.1, -0.2, 0.0, 0.3, 0.0, 0.1, -0.1, 0.2];
        let fit = logistic_irls(&x, &y, Some(&w), Some(&off), IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        let g = logistic_gradient(&x, &y, Some(&w), Some(&off), true, &fit.coef);
        let sw: f64 = w.iter().sum();
        for gj in g {
            assert!((gj * sw).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_line_is_recovered() {
        let x = design(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let y = [0.0, 2.0, 4.0, 6.0];
        let fit = linear_wls(&x, &y, None, None, true).unwrap();
        assert!(fit.coef[0].abs() < 1e-10);
        assert!((fit.coef[1] - 2.0).abs() < 1e-10);
        assert!(fit.deviance < 1e-18);
    }

    #[test]
    fn duplicated_column_gets_jitter_warning() {
        let x = design(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        let y = [1.0, 2.9, 5.1, 7.0];
        let fit = linear_wls(&x, &y, None, None, true).unwrap();
        assert!(fit.warnings.iter().any(|w| w.contains("jitter")));
        assert!((fit.coef[1] + fit.coef[2] - 2.0).abs() < 0.1);
    }

    #[test]
    fn bad_inputs_rejected() {
        let x = design(&[&[0.0], &[1.0]]);
        assert!(logistic_irls(&x, &[0.0], None, None, IrlsOptions::default()).is_err());
        assert!(logistic_irls(&x, &[0.0, 1.0], Some(&[1.0, -1.0]), None, IrlsOptions::default()).is_err());
        assert!(logistic_irls(&x, &[0.0, 1.0], None, Some(&[f64::INFINITY, 0.0]), IrlsOptions::default()).is_err());
    }
}
