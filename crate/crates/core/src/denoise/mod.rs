//! Wavelet denoising and baseline-drift removal.
//!
//! The signal is decomposed with a Daubechies cascade, every detail band is
//! shrunk with [`threshold_eq1`] using its own universal threshold, the
//! deepest approximation band (which at 360 Hz and eight levels covers
//! roughly 0 to 0.7 Hz) is zeroed to drop baseline wander, and the result is
//! reconstructed.

mod threshold;
mod wavelet;

use thiserror::Error;

pub use threshold::{estimate_lambda, threshold_eq1, ThresholdParams, MAD_SCALE};
pub use wavelet::{dwt, idwt, Wavelet, WaveletCoeffs};

#[derive(Debug, Error)]
pub enum DenoiseError {
    #[error("signal of length {len} is too short for {levels} decomposition levels")]
    TooShort { len: usize, levels: usize },
    #[error("unknown wavelet `{0}` (supported: db1, db2, db4, db6, db8)")]
    UnknownWavelet(String),
    #[error("inconsistent wavelet coefficients: {0}")]
    InconsistentCoeffs(String),
    #[error("empty detail level")]
    EmptyLevel,
    #[error("invalid threshold parameters (lambda {lambda}, alpha {alpha})")]
    InvalidParams { lambda: f64, alpha: f64 },
}

impl DenoiseError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            DenoiseError::TooShort { .. } => "TooShort",
            DenoiseError::UnknownWavelet(_) => "UnknownWavelet",
            DenoiseError::InconsistentCoeffs(_) => "InconsistentCoeffs",
            DenoiseError::EmptyLevel => "EmptyLevel",
            DenoiseError::InvalidParams { .. } => "InvalidParams",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub wavelet: Wavelet,
    pub levels: usize,
    pub alpha: f64,
    /// Zero the deepest approximation band.
    pub remove_baseline: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            wavelet: Wavelet::Db6,
            levels: 8,
            alpha: 3.0,
            remove_baseline: true,
        }
    }
}

/// Denoises `signal`; the output has the same length.
pub fn denoise(signal: &[f64], config: &DenoiseConfig) -> Result<Vec<f64>, DenoiseError> {
    let mut coeffs = dwt(signal, config.wavelet, config.levels)?;
    for band in coeffs.details.iter_mut() {
        let lambda = estimate_lambda(band, signal.len())?;
        let params = ThresholdParams::new(lambda, config.alpha)?;
        band.iter_mut().for_each(|c| *c = threshold_eq1(*c, params));
    }
    if config.remove_baseline {
        coeffs.approximation.iter_mut().for_each(|c| *c = 0.0);
    }
    idwt(&coeffs)
}
