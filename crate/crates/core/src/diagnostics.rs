//! Positivity and overlap diagnostics.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{ColumnData, Dataset};
use crate::{Error, Result};

pub const OVERLAP_BINS: usize = 20;
pub const DEFAULT_DOSE_EDGES: [f64; 6] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositivityCell {
    pub level: String,
    pub n_control: usize,
    pub n_treated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositivityTable {
    pub stratifier: String,
    pub cells: Vec<PositivityCell>,
    /// Levels where one arm is empty.
    pub zero_cells: Vec<String>,
    /// Rows skipped because the stratifier or treatment was missing.
    pub missing: usize,
}

/// Control and treated counts per level of a categorical column.
///
/// Reads only the stratifier and the treatment column.
pub fn positivity_table(ds: &Dataset, stratifier: &str) -> Result<PositivityTable> {
    let col = ds.column(stratifier)?;
    let ColumnData::Categorical { levels, codes } = &col.data else {
        return Err(Error::InvalidArgument(format!("stratifier `{stratifier}` is not categorical")));
    };
    let treatment = ds
        .treatment()
        .ok_or_else(|| Error::ColumnSpec("positivity needs a treatment column".into()))?;
    let a = treatment
        .numeric()
        .ok_or_else(|| Error::InvalidArgument("treatment column is not numeric".into()))?;
    let mut counts = vec![(0usize, 0usize); levels.len()];
    let mut missing = 0;
    for (code, a) in codes.iter().zip(a) {
        match (code, a) {
            (Some(l), Some(a)) if *a == 1.0 => counts[*l].1 += 1,
            (Some(l), Some(_)) => counts[*l].0 += 1,
            _ => missing += 1,
        }
    }
    let cells: Vec<PositivityCell> = levels
        .iter()
        .zip(&counts)
        .map(|(level, &(c, t))| PositivityCell {
            level: level.clone(),
            n_control: c,
            n_treated: t,
        })
        .collect();
    let zero_cells = cells
        .iter()
        .filter(|c| c.n_control == 0 || c.n_treated == 0)
        .map(|c| c.level.clone())
        .collect();
    Ok(PositivityTable {
        stratifier: stratifier.to_string(),
        cells,
        zero_cells,
        missing,
    })
}

/// Mann-Whitney AUC: `P(g_treated > g_control) + P(equal) / 2`, via midranks.
pub fn c_statistic(g: &[f64], a: &[f64]) -> Result<f64> {
    if g.len() != a.len() {
        return Err(Error::Dimension(format!("{} scores, {} labels", g.len(), a.len())));
    }
    if g.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let n1 = a.iter().filter(|&&v| v == 1.0).count();
    let n0 = a.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::InvalidArgument("C-statistic needs both arms".into()));
    }
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&i, &j| g[i].total_cmp(&g[j]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && g[idx[end + 1]] == g[idx[start]] {
            end += 1;
        }
        // Ranks are 1-based; tied values share the mean rank.
        let midrank = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += midrank * idx[start..=end].iter().filter(|&&i| a[i] == 1.0).count() as f64;
        start = end + 1;
    }
    let (n1, n0) = (n1 as f64, n0 as f64);
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapBin {
    pub lower: f64,
    pub upper: f64,
    pub n_control: usize,
    pub n_treated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmRange {
    pub n: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapSummary {
    pub bins: Vec<OverlapBin>,
    /// Absent when one arm is empty.
    pub c_statistic: Option<f64>,
    pub treated: ArmRange,
    pub control: ArmRange,
}

fn edge(k: usize) -> f64 {
    k as f64 / OVERLAP_BINS as f64
}

/// Bin index for a score: `[0, 0.05]`, then `(0.05, 0.10]`, ... `(0.95, 1]`.
pub fn overlap_bin(g: f64) -> usize {
    (0..OVERLAP_BINS).find(|&k| g <= edge(k + 1)).unwrap_or(OVERLAP_BINS - 1)
}

fn arm_range(g: &[f64], a: &[f64], arm: f64) -> ArmRange {
    let vals: Vec<f64> = g.iter().zip(a).filter(|(_, &v)| v == arm).map(|(g, _)| *g).collect();
    ArmRange {
        n: vals.len(),
        min: vals.iter().copied().reduce(f64::min),
        max: vals.iter().copied().reduce(f64::max),
    }
}

/// Per-arm propensity histogram on 20 fixed bins of width 0.05.
pub fn overlap_summary(g: &[f64], a: &[f64]) -> Result<OverlapSummary> {
    if g.len() != a.len() {
        return Err(Error::Dimension(format!("{} scores, {} labels", g.len(), a.len())));
    }
    if let Some(v) = g.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("propensity score {v} outside [0, 1]")));
    }
    let mut bins: Vec<OverlapBin> = (0..OVERLAP_BINS)
        .map(|k| OverlapBin {
            lower: edge(k),
            upper: edge(k + 1),
            n_control: 0,
            n_treated: 0,
        })
        .collect();
    for (g, a) in g.iter().zip(a) {
        let b = &mut bins[overlap_bin(*g)];
        if *a == 1.0 {
            b.n_treated += 1;
        } else {
            b.n_control += 1;
        }
    }
    Ok(OverlapSummary {
        bins,
        c_statistic: c_statistic(g, a).ok(),
        treated: arm_range(g, a, 1.0),
        control: arm_range(g, a, 0.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DoseBin {
    pub label: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub n: usize,
    pub events: usize,
    /// Absent for empty bins.
    pub proportion: Option<f64>,
}

fn fmt_edge(v: f64) -> String {
    format!("{v}")
}

/// Outcome proportions per dose bin: `<= e0`, `(e0, e1]`, ..., `(e_last, inf)`.
pub fn crude_dose_table(ds: &Dataset, dose: &str, edges: &[f64]) -> Result<Vec<DoseBin>> {
    if edges.is_empty() || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("dose bin edges must be finite and strictly ascending".into()));
    }
    let d = ds
        .column(dose)?
        .numeric()
        .ok_or_else(|| Error::InvalidArgument(format!("dose column `{dose}` is not numeric")))?;
    let y = ds
        .outcome()
        .and_then(|c| c.numeric())
        .ok_or_else(|| Error::ColumnSpec("dose table needs a numeric outcome".into()))?;
    let mut bins: Vec<DoseBin> = Vec::with_capacity(edges.len() + 1);
    bins.push(DoseBin {
        label: if edges[0] == 0.0 { "0".into() } else { format!("<={}", fmt_edge(edges[0])) },
        lower: None,
        upper: Some(edges[0]),
        n: 0,
        events: 0,
        proportion: None,
    });
    for w in edges.windows(2) {
        bins.push(DoseBin {
            label: format!("({},{}]", fmt_edge(w[0]), fmt_edge(w[1])),
            lower: Some(w[0]),
            upper: Some(w[1]),
            n: 0,
            events: 0,
            proportion: None,
        });
    }
    let last = edges[edges.len() - 1];
    bins.push(DoseBin {
        label: format!(">{}", fmt_edge(last)),
        lower: Some(last),
        upper: None,
        n: 0,
        events: 0,
        proportion: None,
    });
    for (d, y) in d.iter().zip(y) {
        let (Some(d), Some(y)) = (d, y) else { continue };
        let k = edges.iter().position(|e| *d <= *e).unwrap_or(edges.len());
        bins[k].n += 1;
        if *y == 1.0 {
            bins[k].events += 1;
        }
    }
    for b in &mut bins {
        b.proportion = (b.n > 0).then(|| b.events as f64 / b.n as f64);
    }
    Ok(bins)
}
