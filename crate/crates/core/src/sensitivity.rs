//! Causal-gap sensitivity analysis.
//!
//! A hypothesized gap `delta` between the statistical estimand and the causal
//! parameter shifts the point estimate and both interval bounds by `-delta`.

use alloc::format;
use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveRow {
    pub delta: f64,
    pub delta_se_units: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityCurve {
    pub psi: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub rows: Vec<CurveRow>,
    /// Smallest positive gap at which a positive, significant estimate loses significance.
    pub threshold_significance_pos: Option<f64>,
    /// Smallest positive gap beyond which the whole interval is negative.
    pub threshold_sign_reversal_pos: Option<f64>,
    /// Mirror images for a negative estimate (negative gaps).
    pub threshold_significance_neg: Option<f64>,
    pub threshold_sign_reversal_neg: Option<f64>,
}

/// 41 evenly spaced gaps over `[-2|psi|, 2|psi|]` (or `[-4 se, 4 se]` when `psi = 0`),
/// with 0 exactly in the middle.
pub fn default_grid(psi: f64, se: f64) -> Vec<f64> {
    let span = if psi != 0.0 { 2.0 * abs(psi) } else { 4.0 * se };
    let half = (DEFAULT_GRID_POINTS / 2) as f64;
    (0..DEFAULT_GRID_POINTS)
        .map(|k| span * (k as f64 - half) / half)
        .collect()
}

pub fn causal_gap_curve(psi: f64, se: f64, ci: (f64, f64), grid: &[f64]) -> Result<SensitivityCurve> {
    let (lower, upper) = ci;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sensitivity grid".into()));
    }
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::InvalidArgument(format!("standard error must be positive, got {se}")));
    }
    if !(lower <= psi && psi <= upper) {
        return Err(Error::InvalidArgument(format!("interval [{lower}, {upper}] does not contain {psi}")));
    }
    if grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("non-finite gap in grid".into()));
    }
    let mut deltas = grid.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let rows = deltas
        .iter()
        .map(|&delta| CurveRow {
            delta,
            delta_se_units: delta / se,
            estimate: psi - delta,
            lower: lower - delta,
            upper: upper - delta,
        })
        .collect();
    let (sig_pos, rev_pos, sig_neg, rev_neg) = if psi >= 0.0 {
        ((lower > 0.0).then_some(lower), (upper > 0.0).then_some(upper), None, None)
    } else {
        (None, None, (upper < 0.0).then_some(upper), (lower < 0.0).then_some(lower))
    };
    Ok(SensitivityCurve {
        psi,
        se,
        lower,
        upper,
        rows,
        threshold_significance_pos: sig_pos,
        threshold_sign_reversal_pos: rev_pos,
        threshold_significance_neg: sig_neg,
        threshold_sign_reversal_neg: rev_neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn reported_interval_thresholds() {
        let c = causal_gap_curve(0.21, 0.062, (0.09, 0.33), &default_grid(0.21, 0.062)).unwrap();
        assert_eq!(c.threshold_significance_pos, Some(0.09));
        assert_eq!(c.threshold_sign_reversal_pos, Some(0.33));
        assert_eq!(c.threshold_significance_neg, None);
        assert_eq!(c.rows.len(), 41);
        assert_eq!(c.rows[20].delta, 0.0);
        assert!((c.rows[0].delta + 0.42).abs() < 1e-15);
    }

    #[test]
    fn one_se_shift() {
        let c = causal_gap_curve(0.21, 0.062, (0.09, 0.33), &[0.062]).unwrap();
        assert!((c.rows[0].estimate - 0.148).abs() < 1e-12);
        assert_eq!(c.rows[0].delta_se_units, 1.0);
    }

    #[test]
    fn zero_gap_is_unshifted() {
        let c = causal_gap_curve(0.21, 0.062, (0.09, 0.33), &[0.0]).unwrap();
        assert_eq!(c.rows, vec![CurveRow { delta: 0.0, delta_se_units: 0.0, estimate: 0.21, lower: 0.09, upper: 0.33 }]);
    }

    #[test]
    fn negative_estimate_mirrors() {
        let c = causal_gap_curve(-0.21, 0.062, (-0.33, -0.09), &[0.0]).unwrap();
        assert_eq!(c.threshold_significance_neg, Some(-0.09));
        assert_eq!(c.threshold_sign_reversal_neg, Some(-0.33));
        assert_eq!(c.threshold_significance_pos, None);
    }

    #[test]
    fn insignificant_estimate_has_no_significance_threshold() {
        let c = causal_gap_curve(0.05, 0.05, (-0.048, 0.148), &[0.0]).unwrap();
        assert_eq!(c.threshold_significance_pos, None);
        assert_eq!(c.threshold_sign_reversal_pos, Some(0.148));
    }

    #[test]
    fn invalid_inputs() {
        assert!(causal_gap_curve(0.2, 0.1, (0.0, 0.4), &[]).is_err());
        assert!(causal_gap_curve(0.2, 0.0, (0.0, 0.4), &[0.0]).is_err());
        assert!(causal_gap_curve(0.5, 0.1, (0.0, 0.4), &[0.0]).is_err());
    }

    #[test]
    fn zero_estimate_grid_uses_standard_errors() {
        let g = default_grid(0.0, 0.1);
        assert!((g[0] + 0.4).abs() < 1e-15 && (g[40] - 0.4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn shifts_are_linear_and_width_preserving(
            psi in -1.0f64..1.0, se in 0.001f64..0.5, d1 in -1.0f64..1.0, d2 in -1.0f64..1.0,
        ) {
            let ci = (psi - 1.96 * se, psi + 1.96 * se);
            let both = causal_gap_curve(psi, se, ci, &[d1 + d2]).unwrap().rows[0];
            let first = causal_gap_curve(psi, se, ci, &[d1]).unwrap().rows[0];
            let second = causal_gap_curve(first.estimate, se, (first.lower, first.upper), &[d2]).unwrap().rows[0];
            prop_assert!((both.estimate - second.estimate).abs() < 1e-12);
            prop_assert!((both.lower - second.lower).abs() < 1e-12);
            prop_assert!((both.upper - second.upper).abs() < 1e-12);
            let curve = causal_gap_curve(psi, se, ci, &default_grid(psi, se)).unwrap();
            let width = ci.1 - ci.0;
            for r in &curve.rows {
                prop_assert!((r.upper - r.lower - width).abs() < 1e-12);
                prop_assert_eq!(r.estimate, psi - r.delta);
            }
        }

        #[test]
        fn threshold_consistency(psi in 0.05f64..1.0, se in 0.001f64..0.02) {
            let ci = (psi - 1.96 * se, psi + 1.96 * se);
            let t = causal_gap_curve(psi, se, ci, &[0.0]).unwrap().threshold_significance_pos.unwrap();
            let step = t / 10.0;
            let grid: Vec<f64> = (0..=10).map(|k| if k == 10 { t } else { step * k as f64 }).collect();
            let c = causal_gap_curve(psi, se, ci, &grid).unwrap();
            let at = c.rows.iter().position(|r| r.delta == t).unwrap();
            prop_assert!(c.rows[at].lower <= 0.0);
            prop_assert!(c.rows[at - 1].lower > 0.0);
        }
    }
}
