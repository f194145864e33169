//! L1-penalized regression paths by cyclic coordinate descent.
//!
//! Columns are standardized internally (weighted mean 0, variance 1) and the
//! penalty applies to the standardized coefficients; returned coefficients are
//! on the original scale. Logistic paths use proximal Newton steps: a weighted
//! least-squares quadratic model solved by coordinate descent, followed by a
//! backtracking line search on the penalized objective.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::Loss;
use crate::learners::glm::{check_inputs, logistic_irls, IrlsOptions};
use crate::math::{bernoulli_nll_eta, expit, ln, sqrt};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    /// Per lambda: intercept followed by one coefficient per column.
    pub coefs: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub lambda_max: f64,
}

struct Standardized {
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

fn standardize(x: &Matrix, w: &[f64]) -> Standardized {
    let sw: f64 = w.iter().sum();
    let p = x.ncols();
    let mut cols = Vec::with_capacity(p);
    let mut means = Vec::with_capacity(p);
    let mut sds = Vec::with_capacity(p);
    for j in 0..p {
        let c = x.column(j);
        let m = c.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / sw;
        let var = c.iter().zip(w).map(|(v, w)| w * (v - m) * (v - m)).sum::<f64>() / sw;
        let sd = sqrt(var);
        // Constant columns stay at zero.
        let sd = if sd > 1e-12 * (1.0 + m.abs()) { sd } else { 0.0 };
        cols.push(c.iter().map(|v| if sd > 0.0 { (v - m) / sd } else { 0.0 }).collect());
        means.push(m);
        sds.push(sd);
    }
    Standardized { cols, means, sds }
}

fn soft_threshold(u: f64, lambda: f64) -> f64 {
    if u > lambda {
        u - lambda
    } else if u < -lambda {
        u + lambda
    } else {
        0.0
    }
}

/// Smallest penalty at which every standardized coefficient is zero.
pub fn lambda_max(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    loss: Loss,
) -> Result<f64> {
    check_inputs(x, y, weights, offset)?;
    let n = x.nrows();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let st = standardize(x, w);
    let resid = null_residuals(y, w, offset, loss)?;
    let sw: f64 = w.iter().sum();
    Ok(st
        .cols
        .iter()
        .map(|c| (0..n).map(|i| w[i] * c[i] * resid[i]).sum::<f64>().abs() / sw)
        .fold(0.0, f64::max))
}

/// `y - fitted` under the intercept-only model.
fn null_residuals(y: &[f64], w: &[f64], offset: Option<&[f64]>, loss: Loss) -> Result<Vec<f64>> {
    let n = y.len();
    Ok(match loss {
        Loss::SquaredError => {
            let z: Vec<f64> = (0..n).map(|i| y[i] - offset.map_or(0.0, |o| o[i])).collect();
            let sw: f64 = w.iter().sum();
            let m = z.iter().zip(w).map(|(z, w)| z * w).sum::<f64>() / sw;
            z.iter().map(|z| z - m).collect()
        }
        Loss::NegLogLik => {
            let fit = logistic_irls(&Matrix::empty(n), y, Some(w), offset, IrlsOptions::default())?;
            (0..n)
                .map(|i| y[i] - expit(fit.coef[0] + offset.map_or(0.0, |o| o[i])))
                .collect()
        }
    })
}

/// `n` log-spaced penalties from `lambda_max` down to `ratio * lambda_max`.
pub fn default_grid(lambda_max: f64, n: usize, ratio: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (ln(lambda_max), ln(lambda_max * ratio));
    (0..n)
        .map(|k| crate::math::exp(hi + (lo - hi) * k as f64 / (n - 1) as f64))
        .collect()
}

struct Problem<'a> {
    st: &'a Standardized,
    y: &'a [f64],
    w: &'a [f64],
    offset: Option<&'a [f64]>,
    sw: f64,
    loss: Loss,
}

impl Problem<'_> {
    fn eta(&self, b0: f64, b: &[f64]) -> Vec<f64> {
        let n = self.y.len();
        let mut eta: Vec<f64> = (0..n).map(|i| b0 + self.offset.map_or(0.0, |o| o[i])).collect();
        for (c, bj) in self.st.cols.iter().zip(b) {
            if *bj != 0.0 {
                for (e, v) in eta.iter_mut().zip(c) {
                    *e += bj * v;
                }
            }
        }
        eta
    }

    fn objective(&self, b0: f64, b: &[f64], lambda: f64) -> f64 {
        let eta = self.eta(b0, b);
        let data: f64 = match self.loss {
            Loss::SquaredError => (0..self.y.len())
                .map(|i| 0.5 * self.w[i] * (self.y[i] - eta[i]) * (self.y[i] - eta[i]))
                .sum(),
            Loss::NegLogLik => (0..self.y.len())
                .map(|i| self.w[i] * bernoulli_nll_eta(self.y[i], eta[i]))
                .sum(),
        };
        data / self.sw + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Coordinate descent on `½ Σ hᵢ (zᵢ - b0 - x̃ᵢb)² + λ‖b‖₁`, warm-started at (b0, b).
    fn solve_quadratic(&self, h: &[f64], z: &[f64], b0: &mut f64, b: &mut [f64], lambda: f64) {
        let n = z.len();
        let mut r: Vec<f64> = {
            let eta = self.eta(*b0, b);
            (0..n).map(|i| z[i] - (eta[i] - self.offset.map_or(0.0, |o| o[i]))).collect()
        };
        let sh: f64 = h.iter().sum();
        let a: Vec<f64> = self
            .st
            .cols
            .iter()
            .map(|c| c.iter().zip(h).map(|(v, h)| h * v * v).sum())
            .collect();
        for _sweep in 0..100_000 {
            let mut max_change: f64 = 0.0;
            let d0 = r.iter().zip(h).map(|(r, h)| r * h).sum::<f64>() / sh;
            if d0 != 0.0 {
                *b0 += d0;
                r.iter_mut().for_each(|ri| *ri -= d0);
                max_change = max_change.max(d0.abs());
            }
            for (j, c) in self.st.cols.iter().enumerate() {
                if a[j] <= 0.0 {
                    continue;
                }
                let u = (0..n).map(|i| h[i] * c[i] * r[i]).sum::<f64>() + a[j] * b[j];
                let nb = soft_threshold(u, lambda) / a[j];
                let d = nb - b[j];
                if d != 0.0 {
                    for (ri, v) in r.iter_mut().zip(c) {
                        *ri -= d * v;
                    }
                    b[j] = nb;
                    max_change = max_change.max(d.abs() * sqrt(a[j]));
                }
            }
            if max_change < 1e-14 {
                break;
            }
        }
    }

    /// Proximal Newton iterations for one penalty value; returns convergence.
    fn solve(&self, b0: &mut f64, b: &mut [f64], lambda: f64) -> bool {
        let n = self.y.len();
        match self.loss {
            Loss::SquaredError => {
                let h: Vec<f64> = self.w.iter().map(|w| w / self.sw).collect();
                let z: Vec<f64> = (0..n).map(|i| self.y[i] - self.offset.map_or(0.0, |o| o[i])).collect();
                self.solve_quadratic(&h, &z, b0, b, lambda);
                true
            }
            Loss::NegLogLik => {
                for _ in 0..100 {
                    let eta = self.eta(*b0, b);
                    let mut h = Vec::with_capacity(n);
                    let mut z = Vec::with_capacity(n);
                    for i in 0..n {
                        let p = expit(eta[i]);
                        let hi = (self.w[i] * p * (1.0 - p)).max(1e-5 * self.w[i]) / self.sw;
                        let g = self.w[i] * (self.y[i] - p) / self.sw;
                        h.push(hi);
                        z.push(eta[i] - self.offset.map_or(0.0, |o| o[i]) + if hi > 0.0 { g / hi } else { 0.0 });
                    }
                    let (mut nb0, mut nb) = (*b0, b.to_vec());
                    self.solve_quadratic(&h, &z, &mut nb0, &mut nb, lambda);
                    let f0 = self.objective(*b0, b, lambda);
                    let mut t = 1.0;
                    let (mut cb0, mut cb) = (nb0, nb.clone());
                    loop {
                        let f1 = self.objective(cb0, &cb, lambda);
                        if f1 <= f0 + 1e-13 * f0.abs() || t < 1e-10 {
                            break;
                        }
                        t *= 0.5;
                        cb0 = *b0 + t * (nb0 - *b0);
                        cb = b.iter().zip(&nb).map(|(o, n)| o + t * (n - o)).collect();
                    }
                    let step = b
                        .iter()
                        .zip(&cb)
                        .map(|(o, n)| (n - o).abs())
                        .fold((cb0 - *b0).abs(), f64::max);
                    *b0 = cb0;
                    b.copy_from_slice(&cb);
                    if step < 1e-10 {
                        return true;
                    }
                }
                false
            }
        }
    }
}

/// Coefficient path over a non-increasing penalty grid, warm-started along the path.
pub fn lasso_path(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    lambdas: &[f64],
    loss: Loss,
) -> Result<LassoPath> {
    check_inputs(x, y, weights, offset)?;
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument("lambda values must be finite and non-negative".into()));
    }
    if lambdas.windows(2).any(|p| p[1] > p[0]) {
        return Err(Error::InvalidArgument("lambda grid must be non-increasing".into()));
    }
    if loss == Loss::NegLogLik {
        super::glm::check_binary(y)?;
    }
    let n = x.nrows();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let st = standardize(x, w);
    let problem = Problem {
        st: &st,
        y,
        w,
        offset,
        sw: w.iter().sum(),
        loss,
    };
    let lmax = lambda_max(x, y, Some(w), offset, loss)?;
    let p = x.ncols();
    let mut b0 = 0.0;
    let mut b = vec![0.0; p];
    let mut coefs = Vec::with_capacity(lambdas.len());
    let mut converged = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        converged.push(problem.solve(&mut b0, &mut b, lambda));
        let mut beta = Vec::with_capacity(p + 1);
        let mut intercept = b0;
        for j in 0..p {
            if st.sds[j] > 0.0 {
                intercept -= b[j] * st.means[j] / st.sds[j];
            }
        }
        beta.push(intercept);
        for j in 0..p {
            beta.push(if st.sds[j] > 0.0 { b[j] / st.sds[j] } else { 0.0 });
        }
        coefs.push(beta);
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        coefs,
        converged,
        lambda_max: lmax,
    })
}

/// Fold labels from content-sorted rows, so the assignment does not depend on row order.
fn content_folds(x: &Matrix, y: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| {
        y[a].total_cmp(&y[b]).then_with(|| {
            x.row(a)
                .iter()
                .zip(x.row(b))
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    let mut folds = vec![0; y.len()];
    for (rank, &i) in idx.iter().enumerate() {
        folds[i] = rank % k;
    }
    folds
}

pub(crate) struct CvLasso {
    pub coef: Vec<f64>,
    pub lambda: f64,
    pub converged: bool,
}

/// Logistic lasso with the penalty chosen by K-fold cross-validated deviance.
pub(crate) fn cv_lasso_logistic(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    nlambda: usize,
    ratio: f64,
    k: usize,
) -> Result<CvLasso> {
    let n = x.nrows();
    let lmax = lambda_max(x, y, weights, offset, Loss::NegLogLik)?;
    if lmax <= 0.0 || x.ncols() == 0 {
        let path = lasso_path(x, y, weights, offset, &[0.0], Loss::NegLogLik)?;
        return Ok(CvLasso {
            coef: path.coefs[0].clone(),
            lambda: 0.0,
            converged: path.converged[0],
        });
    }
    let grid = default_grid(lmax, nlambda, ratio);
    let k = k.clamp(2, n.max(2));
    let folds = content_folds(x, y, k);
    let mut cv_loss = vec![0.0; grid.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        if test.is_empty() || train.is_empty() {
            continue;
        }
        let pick = |v: Option<&[f64]>, idx: &[usize]| v.map(|v| idx.iter().map(|&i| v[i]).collect::<Vec<_>>());
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (wtr, otr) = (pick(weights, &train), pick(offset, &train));
        let path = lasso_path(
            &x.select_rows(&train),
            &ytr,
            wtr.as_deref(),
            otr.as_deref(),
            &grid,
            Loss::NegLogLik,
        )?;
        let xte = x.select_rows(&test);
        for (l, coef) in path.coefs.iter().enumerate() {
            let eta = crate::matrix::linear_predictor(&xte, true, coef);
            for (t, &i) in test.iter().enumerate() {
                let e = eta[t] + offset.map_or(0.0, |o| o[i]);
                cv_loss[l] += weights.map_or(1.0, |w| w[i]) * Loss::NegLogLik.eval(y[i], expit(e));
            }
        }
    }
    let best = cv_loss
        .iter()
        .enumerate()
        .fold(0, |best, (l, v)| if *v < cv_loss[best] { l } else { best });
    let path = lasso_path(x, y, weights, offset, &grid[..=best], Loss::NegLogLik)?;
    Ok(CvLasso {
        coef: path.coefs[best].clone(),
        lambda: grid[best],
        converged: path.converged[best],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::glm::{lasso_gradient, logistic_irls};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(n: usize, p: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
        let y = rows
            .iter()
            .map(|r| {
                let eta = 0.3 + r.iter().enumerate().map(|(j, v)| v * (j as f64 - 1.0)).sum::<f64>();
                f64::from(u8::from(rng.random::<f64>() < expit(eta)))
            })
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn above_lambda_max_only_intercept() {
        let (x, y) = sample(80, 3, 1);
        let lmax = lambda_max(&x, &y, None, None, Loss::NegLogLik).unwrap();
        let path = lasso_path(&x, &y, None, None, &[1e6, lmax * 1.0001, lmax * 0.9], Loss::NegLogLik).unwrap();
        for c in &path.coefs[..2] {
            assert!(c[1..].iter().all(|b| *b == 0.0));
        }
        assert!(path.coefs[2][1..].iter().any(|b| *b != 0.0));
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        assert!((expit(path.coefs[0][0]) - ybar).abs() < 1e-9);
    }

    #[test]
    fn zero_penalty_matches_irls() {
        let (x, y) = sample(120, 3, 2);
        let path = lasso_path(&x, &y, None, None, &[0.0], Loss::NegLogLik).unwrap();
        let mle = logistic_irls(&x, &y, None, None, IrlsOptions::default()).unwrap();
        for (a, b) in path.coefs[0].iter().zip(&mle.coef) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn gaussian_zero_penalty_is_least_squares() {
        let (x, _) = sample(50, 2, 3);
        let y: Vec<f64> = (0..50).map(|i| 1.0 + 2.0 * x.get(i, 0) - x.get(i, 1) + 0.01 * (i as f64).sin()).collect();
        let path = lasso_path(&x, &y, None, None, &[0.0], Loss::SquaredError).unwrap();
        let ols = crate::learners::glm::linear_wls(&x, &y, None, None, true).unwrap();
        for (a, b) in path.coefs[0].iter().zip(&ols.coef) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn duplicated_column_splits_mass_without_changing_predictions() {
        let (x, y) = sample(100, 2, 4);
        let dup = x.hstack(&Matrix::from_columns(&[x.column(0)], vec!["dup".into()]).unwrap()).unwrap();
        let lmax = lambda_max(&x, &y, None, None, Loss::NegLogLik).unwrap();
        let grid = default_grid(lmax, 10, 0.01);
        let a = lasso_path(&x, &y, None, None, &grid, Loss::NegLogLik).unwrap();
        let b = lasso_path(&dup, &y, None, None, &grid, Loss::NegLogLik).unwrap();
        for l in 0..grid.len() {
            let pa = crate::matrix::linear_predictor(&x, true, &a.coefs[l]);
            let pb = crate::matrix::linear_predictor(&dup, true, &b.coefs[l]);
            for (u, v) in pa.iter().zip(&pb) {
                assert!((expit(*u) - expit(*v)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn solution_satisfies_kkt() {
        let (x, y) = sample(150, 4, 5);
        let lmax = lambda_max(&x, &y, None, None, Loss::NegLogLik).unwrap();
        let lambda = 0.2 * lmax;
        let path = lasso_path(&x, &y, None, None, &[lambda], Loss::NegLogLik).unwrap();
        // KKT on the standardized problem: active coordinates have |gradient| = lambda.
        let beta = &path.coefs[0];
        let g = lasso_gradient(&x, &y, None, true, beta, 0.0);
        assert!(g[0].abs() < 1e-8);
        let st = standardize(&x, &[1.0; 150]);
        for j in 0..4 {
            let gs = g[j + 1] / st.sds[j];
            if beta[j + 1] != 0.0 {
                assert!((gs + lambda * beta[j + 1].signum()).abs() < 1e-7);
            } else {
                assert!(gs.abs() <= lambda + 1e-9);
            }
        }
    }

    #[test]
    fn invalid_grids() {
        let (x, y) = sample(20, 2, 6);
        assert!(lasso_path(&x, &y, None, None, &[-1.0], Loss::NegLogLik).is_err());
        assert!(lasso_path(&x, &y, None, None, &[0.1, 0.2], Loss::NegLogLik).is_err());
        assert!(lasso_path(&x, &y, None, None, &[], Loss::NegLogLik).is_err());
    }
}
