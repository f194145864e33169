//! Natural cubic spline expansion of continuous columns.
//!
//! Uses the truncated-power natural spline basis: with knots ξ₁ < … < ξ_K,
//! the nonlinear terms are `d_k(x) - d_{K-1}(x)` for `k = 1..K-2`, where
//! `d_k(x) = ((x-ξ_k)₊³ - (x-ξ_K)₊³) / (ξ_K - ξ_k)`. The fit is linear beyond
//! the boundary knots. Interior knots sit at equally spaced training quantiles
//! (quartiles for three knots); boundary knots at the training min and max.

use alloc::vec::Vec;

use crate::math::quantile_sorted;
use crate::{Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnKnots {
    pub column: usize,
    /// Sorted, boundaries included.
    pub knots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplineBasis {
    pub columns: Vec<ColumnKnots>,
}

fn cube_plus(v: f64) -> f64 {
    if v > 0.0 {
        v * v * v
    } else {
        0.0
    }
}

impl SplineBasis {
    /// Places knots for every column with more than two distinct values.
    pub fn fit(x: &Matrix, interior_knots: usize) -> Self {
        let mut columns = Vec::new();
        for j in 0..x.ncols() {
            let mut v = x.column(j);
            v.sort_by(f64::total_cmp);
            let mut distinct = v.clone();
            distinct.dedup();
            if distinct.len() <= 2 {
                continue;
            }
            let (lo, hi) = (v[0], v[v.len() - 1]);
            let mut knots = Vec::with_capacity(interior_knots + 2);
            knots.push(lo);
            for k in 1..=interior_knots {
                let q = quantile_sorted(&v, k as f64 / (interior_knots + 1) as f64);
                if q > *knots.last().unwrap() && q < hi {
                    knots.push(q);
                }
            }
            knots.push(hi);
            columns.push(ColumnKnots { column: j, knots });
        }
        Self { columns }
    }

    pub fn n_terms(&self) -> usize {
        self.columns.iter().map(|c| c.knots.len().saturating_sub(2)).sum()
    }

    /// The original columns followed by the nonlinear spline terms.
    pub fn expand(&self, x: &Matrix) -> Result<Matrix> {
        if self.n_terms() == 0 {
            return Ok(x.clone());
        }
        let mut extra: Vec<Vec<f64>> = Vec::new();
        let mut names = Vec::new();
        for ck in &self.columns {
            let xi = &ck.knots;
            let kk = xi.len();
            if kk < 3 {
                continue;
            }
            let last = xi[kk - 1];
            let scale = (last - xi[0]) * (last - xi[0]);
            let d = |k: usize, v: f64| (cube_plus(v - xi[k]) - cube_plus(v - last)) / (last - xi[k]);
            for k in 0..kk - 2 {
                extra.push(
                    (0..x.nrows())
                        .map(|i| {
                            let v = x.get(i, ck.column);
                            (d(k, v) - d(kk - 2, v)) / scale
                        })
                        .collect(),
                );
                names.push(alloc::format!("ns({})[{}]", x.names()[ck.column], k + 1));
            }
        }
        x.hstack(&Matrix::from_columns(&extra, names)?)
    }
}
