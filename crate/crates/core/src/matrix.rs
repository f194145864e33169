//! Dense row-major design matrices with named columns.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if names.len() != cols {
            return Err(Error::Dimension(alloc::format!(
                "{} names for {cols} columns",
                names.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            names,
        })
    }

    /// Matrix with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(alloc::format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        let names = (0..cols).map(|j| alloc::format!("x{j}")).collect();
        Self::new(rows.len(), cols, data, names)
    }

    pub fn from_columns(columns: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for c in columns {
                data.push(c[i]);
            }
        }
        Self::new(rows, cols, data, names)
    }

    /// An `n x 0` matrix (intercept-only designs).
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            data: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
            names: self.names.clone(),
        }
    }

    /// Appends the columns of `other` to the right.
    pub fn hstack(&self, other: &Matrix) -> Result<Self> {
        if other.rows != self.rows {
            return Err(Error::Dimension(alloc::format!(
                "cannot stack {} rows beside {}",
                other.rows,
                self.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        Ok(Self {
            rows: self.rows,
            cols,
            data,
            names,
        })
    }

    /// Copy with column `j` replaced by the constant `v`.
    pub fn with_column_value(&self, j: usize, v: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            out.set(i, j, v);
        }
        out
    }

    pub(crate) fn check_cols(&self, expected: usize) -> Result<()> {
        if self.cols != expected {
            return Err(Error::Dimension(alloc::format!(
                "expected {expected} columns, got {}",
                self.cols
            )));
        }
        Ok(())
    }
}

/// Solves the symmetric positive (semi-)definite system `a x = b`.
///
/// Falls back to a ridge jitter when the Cholesky factorization fails; the
/// returned flag reports whether the jitter was needed.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, bool)> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Some((x, false));
        }
    }
    let k = a.nrows();
    let scale = (0..k).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut jitter = 1e-10 * scale;
    for _ in 0..12 {
        let mut aj = a.clone();
        for i in 0..k {
            aj[(i, i)] += jitter;
        }
        if let Some(ch) = aj.cholesky() {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Some((x, true));
            }
        }
        jitter *= 10.0;
    }
    None
}

/// Weighted cross-product `Xᵀ W X` and `Xᵀ W z` of a design with an optional leading intercept.
pub(crate) fn weighted_normal_equations(
    x: &Matrix,
    intercept: bool,
    w: &[f64],
    z: &[f64],
) -> (DMatrix<f64>, DVector<f64>) {
    let off = usize::from(intercept);
    let k = x.ncols() + off;
    let mut xtwx = DMatrix::<f64>::zeros(k, k);
    let mut xtwz = DVector::<f64>::zeros(k);
    let mut buf = alloc::vec![0.0; k];
    for i in 0..x.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        if intercept {
            buf[0] = 1.0;
        }
        buf[off..].copy_from_slice(x.row(i));
        for a in 0..k {
            let wa = wi * buf[a];
            xtwz[a] += wa * z[i];
            for b in a..k {
                xtwx[(a, b)] += wa * buf[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    (xtwx, xtwz)
}

/// `X β` for a design with an optional leading intercept coefficient.
pub(crate) fn linear_predictor(x: &Matrix, intercept: bool, beta: &[f64]) -> Vec<f64> {
    let off = usize::from(intercept);
    (0..x.nrows())
        .map(|i| {
            let b0 = if intercept { beta[0] } else { 0.0 };
            b0 + x
                .row(i)
                .iter()
                .zip(&beta[off..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}
