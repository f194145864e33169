//! Scalar helpers shared by the estimators.

/// Clipping applied to probabilities before taking logs in loss evaluation.
pub const PROB_CLIP: f64 = 1e-6;

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn log1pexp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        libm::exp(x)
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Bernoulli negative log-likelihood of `y` under linear predictor `eta`.
pub fn bernoulli_nll_eta(y: f64, eta: f64) -> f64 {
    // -[y log p + (1-y) log(1-p)] with p = expit(eta)
    y * log1pexp(-eta) + (1.0 - y) * log1pexp(eta)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn weighted_mean(xs: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        None => mean(xs),
        Some(w) => {
            let sw: f64 = w.iter().sum();
            xs.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw
        }
    }
}

/// Type-7 (linear interpolation) quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = if lo + 1 < n { lo + 1 } else { lo };
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expit_logit_roundtrip() {
        for &p in &[1e-9, 0.1, 0.5, 0.75, 0.999] {
            assert!((expit(logit(p)) - p).abs() < 1e-12);
        }
        assert!((logit(0.75) - 1.0986122886681098).abs() < 1e-12);
    }

    #[test]
    fn nll_matches_direct_formula() {
        for &(y, eta) in &[(1.0, 0.3), (0.0, -2.0), (1.0, -4.0)] {
            let p = expit(eta);
            let direct = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert!((bernoulli_nll_eta(y, eta) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn quantiles_follow_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.25), 1.75);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
    }
}
