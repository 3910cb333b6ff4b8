//! Smooth coefficient shrinkage and per-level threshold estimation.

use super::DenoiseError;

/// MAD-to-sigma factor for Gaussian noise.
pub const MAD_SCALE: f64 = 0.6745;

/// Threshold `lambda` and shape `alpha` of the shrinkage rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl ThresholdParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self, DenoiseError> {
        if !(lambda.is_finite() && lambda >= 0.0 && alpha.is_finite() && alpha > 0.0) {
            return Err(DenoiseError::InvalidParams { lambda, alpha });
        }
        Ok(ThresholdParams { lambda, alpha })
    }
}

/// Shrinks one wavelet coefficient.
///
/// Coefficients below `lambda` in magnitude are zeroed; the rest become
/// `sgn(w) * (|w| - lambda / exp(3 * alpha * (|w| - lambda) / lambda))`, which
/// is continuous at `|w| = lambda` and approaches the identity as `|w|` grows.
/// With `lambda == 0` the coefficient is returned unchanged.
pub fn threshold_eq1(w: f64, params: ThresholdParams) -> f64 {
    let lambda = params.lambda;
    if lambda == 0.0 {
        return w;
    }
    let mag = w.abs();
    if mag < lambda {
        return 0.0;
    }
    let excess = (mag - lambda) / lambda;
    w.signum() * (mag - lambda * (-3.0 * params.alpha * excess).exp())
}

/// Universal threshold `sigma * sqrt(2 ln n)` with `sigma = median(|d|) / 0.6745`.
///
/// `signal_len` is the length of the signal the detail band was computed from.
pub fn estimate_lambda(detail: &[f64], signal_len: usize) -> Result<f64, DenoiseError> {
    if detail.is_empty() {
        return Err(DenoiseError::EmptyLevel);
    }
    let mut mags: Vec<f64> = detail.iter().map(|d| d.abs()).collect();
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 {
        *mags.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let upper = *mags.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lower = mags[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    let sigma = median / MAD_SCALE;
    let n = signal_len.max(1) as f64;
    Ok(sigma * (2.0 * n.ln()).sqrt())
}
