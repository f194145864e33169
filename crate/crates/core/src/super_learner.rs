//! V-fold cross-validated stacking over a learner library.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::learners::{self, LearnerFit, LearnerSpec, Loss};
use crate::math::{clamp, mean, PROB_CLIP};
use crate::{Error, Matrix, Result};

pub const DEFAULT_SEED: u64 = 20_170_704;
pub const DEFAULT_FOLDS: usize = 20;

const MAX_ITER: usize = 10_000;
const TOL: f64 = 1e-10;
const TIE_BREAK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldAssignment {
    pub fold: Vec<usize>,
    pub v: usize,
    pub seed: u64,
    pub stratified_on: Option<String>,
}

impl FoldAssignment {
    pub fn n(&self) -> usize {
        self.fold.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.v];
        for &f in &self.fold {
            s[f] += 1;
        }
        s
    }

    pub fn heldout(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold[i] == f).collect()
    }

    pub fn training(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold[i] != f).collect()
    }
}

/// Seeded fold assignment.
///
/// Rows are shuffled with `ChaCha8Rng::seed_from_u64(seed)` and dealt round-robin.
/// With a stratifier, the shuffled rows are grouped by stratum (ascending value)
/// before dealing, so every stratum is spread as evenly as the fold count allows.
pub fn make_folds(n: usize, v: usize, seed: u64, stratify: Option<(&str, &[f64])>) -> Result<FoldAssignment> {
    if v < 2 {
        return Err(Error::Folds(format!("need at least 2 folds, got {v}")));
    }
    if v > n {
        return Err(Error::Folds(format!("{v} folds requested for {n} observations")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    if let Some((name, values)) = stratify {
        if values.len() != n {
            return Err(Error::Dimension(format!("stratifier `{name}` has {} values for {n} rows", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Folds(format!("stratifier `{name}` has non-finite values")));
        }
        let mut levels: Vec<f64> = values.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut grouped = Vec::with_capacity(n);
        for level in &levels {
            let members: Vec<usize> = order.iter().copied().filter(|&i| values[i] == *level).collect();
            if members.len() < 2 {
                return Err(Error::Folds(format!(
                    "stratum {name}={level} has {} observation(s); at least 2 are needed",
                    members.len()
                )));
            }
            grouped.extend(members);
        }
        order = grouped;
    }
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % v;
    }
    Ok(FoldAssignment {
        fold,
        v,
        seed,
        stratified_on: stratify.map(|(name, _)| name.into()),
    })
}

/// Held-out predictions for every learner that survived cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPredictions {
    pub library: Vec<LearnerSpec>,
    /// One column of n held-out predictions per surviving learner.
    pub columns: Vec<Vec<f64>>,
    pub cv_risks: Vec<f64>,
    pub dropped: Vec<LearnerSpec>,
    pub warnings: Vec<String>,
}

fn fallback_value(y: &[f64], loss: Loss) -> f64 {
    let m = mean(y);
    match loss {
        Loss::NegLogLik => clamp(m, PROB_CLIP, 1.0 - PROB_CLIP),
        Loss::SquaredError => m,
    }
}

pub fn cv_predictions(
    library: &[LearnerSpec],
    x: &Matrix,
    y: &[f64],
    folds: &FoldAssignment,
    loss: Loss,
) -> Result<CvPredictions> {
    let n = x.nrows();
    if y.len() != n || folds.n() != n {
        return Err(Error::Dimension(format!(
            "x has {n} rows, y has {}, folds cover {}",
            y.len(),
            folds.n()
        )));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds.v).map(|f| (folds.training(f), folds.heldout(f))).collect();
    let mut out = CvPredictions {
        library: Vec::new(),
        columns: Vec::new(),
        cv_risks: Vec::new(),
        dropped: Vec::new(),
        warnings: Vec::new(),
    };
    for spec in library {
        let mut column = vec![0.0; n];
        let mut failed = Vec::new();
        for (f, (train, test)) in splits.iter().enumerate() {
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let preds = learners::fit(spec, &x.select_rows(train), &ytr, None, None)
                .and_then(|fit| learners::predict(&fit, &x.select_rows(test)));
            match preds {
                Ok(p) if p.iter().all(|v| v.is_finite()) => {
                    for (k, &i) in test.iter().enumerate() {
                        column[i] = p[k];
                    }
                }
                _ => {
                    failed.push(f);
                    let fb = fallback_value(&ytr, loss);
                    for &i in test {
                        column[i] = fb;
                    }
                }
            }
        }
        if failed.len() == folds.v {
            out.warnings.push(format!("learner {spec} failed on every fold and was dropped"));
            out.dropped.push(spec.clone());
            continue;
        }
        if !failed.is_empty() {
            out.warnings.push(format!(
                "learner {spec} failed on fold(s) {failed:?}; mean prediction used there"
            ));
        }
        out.cv_risks.push(loss.mean(y, &column));
        out.columns.push(column);
        out.library.push(spec.clone());
    }
    Ok(out)
}

fn combine(columns: &[Vec<f64>], w: &[f64], i: usize) -> f64 {
    columns.iter().zip(w).map(|(c, w)| w * c[i]).sum()
}

struct Meta<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    loss: Loss,
}

impl Meta<'_> {
    fn objective(&self, w: &[f64]) -> f64 {
        let n = self.y.len();
        let data: f64 = (0..n).map(|i| self.loss.eval(self.y[i], combine(self.columns, w, i))).sum::<f64>() / n as f64;
        data + w.iter().enumerate().map(|(k, w)| TIE_BREAK * k as f64 * w).sum::<f64>()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.y.len();
        let mut g: Vec<f64> = (0..w.len()).map(|k| TIE_BREAK * k as f64).collect();
        for i in 0..n {
            let d = self.loss.derivative(self.y[i], combine(self.columns, w, i)) / n as f64;
            for (gk, c) in g.iter_mut().zip(self.columns) {
                *gk += d * c[i];
            }
        }
        g
    }

    /// Derivative of the objective along `e_up - e_down` at step `t`.
    fn slope(&self, w: &[f64], up: usize, down: usize, t: f64) -> f64 {
        let n = self.y.len();
        let (cu, cd) = (&self.columns[up], &self.columns[down]);
        let data: f64 = (0..n)
            .map(|i| {
                let d = cu[i] - cd[i];
                self.loss.derivative(self.y[i], combine(self.columns, w, i) + t * d) * d
            })
            .sum::<f64>()
            / n as f64;
        data + TIE_BREAK * (up as f64 - down as f64)
    }
}

/// Simplex weights minimizing the held-out risk of the convex combination.
///
/// Pairwise feasible-direction descent: each step moves mass from the active
/// learner with the largest gradient to the learner with the smallest, with an
/// exact line search. Risks carry a `1e-12 * index` tie-break term.
pub fn solve_weights(columns: &[Vec<f64>], y: &[f64], loss: Loss) -> (Vec<f64>, Vec<String>) {
    let k = columns.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let uniform = || vec![1.0 / k as f64; k];
    let finite = columns.iter().all(|c| c.len() == y.len() && c.iter().all(|v| v.is_finite()));
    if y.is_empty() || !finite || !y.iter().all(|v| v.is_finite()) {
        return (uniform(), vec![String::from("degenerate held-out matrix; uniform weights used")]);
    }
    let meta = Meta { columns, y, loss };
    let vertex_risk = |j: usize| {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        meta.objective(&e)
    };
    let risks: Vec<f64> = (0..k).map(vertex_risk).collect();
    if risks.iter().any(|r| !r.is_finite()) {
        return (uniform(), vec![String::from("non-finite held-out risk; uniform weights used")]);
    }
    let best = (0..k).fold(0, |b, j| if risks[j] < risks[b] { j } else { b });
    let mut w = vec![0.0; k];
    w[best] = 1.0;
    let mut obj = risks[best];
    for _ in 0..MAX_ITER {
        let g = meta.gradient(&w);
        let up = (0..k).fold(0, |b, j| if g[j] < g[b] { j } else { b });
        let down = (0..k)
            .filter(|&j| w[j] > 0.0)
            .fold(None, |b: Option<usize>, j| match b {
                Some(b) if g[b] >= g[j] => Some(b),
                _ => Some(j),
            })
            .unwrap_or(best);
        let gap = g[down] - g[up];
        if up == down || gap <= TOL {
            break;
        }
        let tmax = w[down];
        let t = if meta.slope(&w, up, down, tmax) <= 0.0 {
            tmax
        } else {
            let (mut lo, mut hi) = (0.0, tmax);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if meta.slope(&w, up, down, mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo
        };
        if t <= 0.0 {
            break;
        }
        w[up] += t;
        w[down] = if t >= tmax { 0.0 } else { w[down] - t };
        let next = meta.objective(&w);
        let change = obj - next;
        obj = next;
        if change.abs() < TOL && gap < TOL {
            break;
        }
    }
    for v in &mut w {
        *v = v.max(0.0);
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (w, Vec::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperLearnerFit {
    pub library: Vec<LearnerSpec>,
    pub weights: Vec<f64>,
    pub cv_risks: Vec<f64>,
    /// Held-out risk of the weighted ensemble on the same predictions.
    pub ensemble_cv_risk: f64,
    pub full_fits: Vec<LearnerFit>,
    pub folds: FoldAssignment,
    pub loss: Loss,
    pub dropped: Vec<LearnerSpec>,
    pub warnings: Vec<String>,
}

impl SuperLearnerFit {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.nrows()];
        for (fit, &w) in self.full_fits.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(learners::predict(fit, x)?) {
                *o += w * p;
            }
        }
        Ok(out)
    }
}

pub fn fit_super_learner(
    library: &[LearnerSpec],
    x: &Matrix,
    y: &[f64],
    folds: &FoldAssignment,
    loss: Loss,
) -> Result<SuperLearnerFit> {
    if library.is_empty() {
        return Err(Error::InvalidArgument("empty learner library".into()));
    }
    let cv = cv_predictions(library, x, y, folds, loss)?;
    let mut warnings = cv.warnings;
    let mut dropped = cv.dropped;
    let mut lib = cv.library;
    let mut columns = cv.columns;
    let mut cv_risks = cv.cv_risks;
    let mut full_fits = Vec::with_capacity(lib.len());
    let mut k = 0;
    while k < lib.len() {
        match learners::fit(&lib[k], x, y, None, None) {
            Ok(fit) => {
                warnings.extend(fit.warnings.iter().map(|w| format!("{}: {w}", lib[k])));
                full_fits.push(fit);
                k += 1;
            }
            Err(e) => {
                warnings.push(format!("learner {} failed on the full data ({e}) and was dropped", lib[k]));
                dropped.push(lib.remove(k));
                columns.remove(k);
                cv_risks.remove(k);
            }
        }
    }
    if lib.is_empty() {
        return Err(Error::AllLearnersFailed);
    }
    let (weights, w_warn) = solve_weights(&columns, y, loss);
    warnings.extend(w_warn);
    let ensemble: Vec<f64> = (0..y.len()).map(|i| combine(&columns, &weights, i)).collect();
    Ok(SuperLearnerFit {
        library: lib,
        weights,
        cv_risks,
        ensemble_cv_risk: loss.mean(y, &ensemble),
        full_fits,
        folds: folds.clone(),
        loss,
        dropped,
        warnings,
    })
}
