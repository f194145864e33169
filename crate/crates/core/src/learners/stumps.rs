//! Gradient-boosted depth-1 trees for binary responses.
//!
//! Each round fits a stump to the logistic-loss gradient, choosing the split
//! with the largest second-order gain `G_L²/H_L + G_R²/H_R - G²/H`. Leaves take
//! a Newton step `G/H`, shrunk by the learning rate.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{clamp, expit, logit, weighted_mean};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stump {
    pub feature: usize,
    /// Rows with `x <= threshold` go left.
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StumpEnsemble {
    /// Logit of the training base rate.
    pub base: f64,
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.stumps.iter().fold(self.base, |f, s| {
            f + if row[s.feature] <= s.threshold { s.left } else { s.right }
        })
    }
}

const MAX_LEAF_STEP: f64 = 4.0;

pub fn fit_stumps(
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    rounds: usize,
    learning_rate: f64,
    min_leaf: usize,
) -> StumpEnsemble {
    let n = x.nrows();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let base = logit(clamp(weighted_mean(y, Some(w)), 1e-6, 1.0 - 1e-6));
    let mut f = vec![base; n];
    let order: Vec<Vec<usize>> = (0..x.ncols())
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            idx
        })
        .collect();
    let min_leaf = min_leaf.max(1);
    let mut stumps = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for i in 0..n {
            let p = expit(f[i]);
            g[i] = w[i] * (y[i] - p);
            h[i] = w[i] * p * (1.0 - p);
        }
        let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let parent = gt * gt / ht.max(1e-12);
        let mut best: Option<(f64, Stump)> = None;
        for (j, idx) in order.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n.saturating_sub(1) {
                let i = idx[k];
                gl += g[i];
                hl += h[i];
                let left_count = k + 1;
                if left_count < min_leaf || n - left_count < min_leaf {
                    continue;
                }
                let (v, next) = (x.get(i, j), x.get(idx[k + 1], j));
                if v == next {
                    continue;
                }
                let (gr, hr) = (gt - gl, ht - hl);
                if hl <= 1e-12 || hr <= 1e-12 {
                    continue;
                }
                let gain = gl * gl / hl + gr * gr / hr - parent;
                if best.as_ref().is_none_or(|(bg, _)| gain > *bg) {
                    best = Some((
                        gain,
                        Stump {
                            feature: j,
                            threshold: 0.5 * (v + next),
                            left: learning_rate * clamp(gl / hl, -MAX_LEAF_STEP, MAX_LEAF_STEP),
                            right: learning_rate * clamp(gr / hr, -MAX_LEAF_STEP, MAX_LEAF_STEP),
                        },
                    ));
                }
            }
        }
        let Some((gain, stump)) = best else { break };
        if gain <= 1e-12 {
            break;
        }
        for i in 0..n {
            f[i] += if x.get(i, stump.feature) <= stump.threshold {
                stump.left
            } else {
                stump.right
            };
        }
        stumps.push(stump);
    }
    StumpEnsemble { base, stumps }
}
