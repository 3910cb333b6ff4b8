//! Beat windows to log-magnitude STFT images.
//!
//! Rows of an image are frequency bins (row 0 is DC) and columns are frames,
//! so a stationary tone shows up as a bright horizontal line.

mod image;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

pub use self::image::{resize_bilinear, SpectrogramImage};

/// Floor added to magnitudes before taking the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectroError {
    #[error("invalid STFT configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid image {height}x{width} with {len} pixels")]
    BadImage { height: usize, width: usize, len: usize },
    #[error("crop {size:?} at {origin:?} exceeds {height}x{width} image")]
    CropOutOfBounds {
        origin: (usize, usize),
        size: (usize, usize),
        height: usize,
        width: usize,
    },
    #[error("png export failed: {0}")]
    Png(String),
}

impl SpectroError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            SpectroError::ConfigInvalid(_) => "ConfigInvalid",
            SpectroError::BadImage { .. } => "BadImage",
            SpectroError::CropOutOfBounds { .. } => "CropOutOfBounds",
            SpectroError::Png(_) => "Png",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFunction {
    Rectangular,
    /// Periodic Hann.
    Hann,
}

impl WindowFunction {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowFunction::Rectangular => vec![1.0; len],
            WindowFunction::Hann => (0..len)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / len as f64).cos())
                .collect(),
        }
    }
}

impl fmt::Display for WindowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowFunction::Rectangular => "rect",
            WindowFunction::Hann => "hann",
        })
    }
}

impl FromStr for WindowFunction {
    type Err = SpectroError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "boxcar" => Ok(WindowFunction::Rectangular),
            "hann" | "hanning" => Ok(WindowFunction::Hann),
            _ => Err(SpectroError::ConfigInvalid(format!("unknown window `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub window: WindowFunction,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_length: 64,
            hop: 2,
            window: WindowFunction::Hann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self, segment_len: usize) -> Result<(), SpectroError> {
        let l = self.window_length;
        if l < 2 || !l.is_multiple_of(2) {
            return Err(SpectroError::ConfigInvalid(format!(
                "window length {l} must be even and at least 2"
            )));
        }
        if self.hop == 0 || self.hop > l {
            return Err(SpectroError::ConfigInvalid(format!(
                "hop {} must be in 1..={l}",
                self.hop
            )));
        }
        if l > segment_len {
            return Err(SpectroError::ConfigInvalid(format!(
                "window length {l} exceeds segment length {segment_len}"
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self, segment_len: usize) -> usize {
        (segment_len - self.window_length) / self.hop + 1
    }

    pub fn bin_count(&self) -> usize {
        self.window_length / 2 + 1
    }
}

/// One-sided STFT, `frames x bins` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct StftMatrix {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl StftMatrix {
    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.bins..(m + 1) * self.bins]
    }

    pub fn magnitude(&self, m: usize, n: usize) -> f64 {
        self.data[m * self.bins + n].norm()
    }
}

/// Short-time Fourier transform of `segment`.
///
/// Frame `m` covers samples `[m * hop, m * hop + L)`. The DFT phase is taken
/// relative to the frame start; magnitudes are unaffected by that choice.
pub fn stft(segment: &[f64], config: &StftConfig) -> Result<StftMatrix, SpectroError> {
    config.validate(segment.len())?;
    let l = config.window_length;
    let frames = config.frame_count(segment.len());
    let bins = config.bin_count();
    let window = config.window.coefficients(l);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(l);
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(frames * bins);
    for m in 0..frames {
        let start = m * config.hop;
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(segment[start + k] * window[k], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(StftMatrix { frames, bins, data })
}

/// `20 log10(|X| + 1e-10)`, min-max normalized per image to `[0, 1]`.
/// Image rows are frequency bins and columns are frames. A constant image
/// maps to all zeros.
pub fn to_log_image(matrix: &StftMatrix) -> Result<SpectrogramImage, SpectroError> {
    if matrix.frames == 0 || matrix.bins == 0 {
        return Err(SpectroError::BadImage {
            height: matrix.bins,
            width: matrix.frames,
            len: matrix.data.len(),
        });
    }
    let (h, w) = (matrix.bins, matrix.frames);
    let mut pixels = vec![0.0; h * w];
    for m in 0..w {
        for (n, x) in matrix.frame(m).iter().enumerate() {
            pixels[n * w + m] = 20.0 * (x.norm() + LOG_FLOOR).log10();
        }
    }
    let (lo, hi) = pixels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if range > 0.0 {
        pixels.iter_mut().for_each(|p| *p = ((*p - lo) / range).clamp(0.0, 1.0));
    } else {
        pixels.iter_mut().for_each(|p| *p = 0.0);
    }
    SpectrogramImage::new(h, w, pixels)
}

/// STFT settings plus the side of the square output image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrogramConfig {
    pub stft: StftConfig,
    pub image_side: usize,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            stft: StftConfig::default(),
            image_side: 64,
        }
    }
}

/// Full segment-to-image transform: STFT, log image, square resize.
pub fn spectrogram(segment: &[f64], config: &SpectrogramConfig) -> Result<SpectrogramImage, SpectroError> {
    let img = to_log_image(&stft(segment, &config.stft)?)?;
    resize_bilinear(&img, config.image_side, config.image_side)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(l: usize, hop: usize) -> StftConfig {
        StftConfig {
            window_length: l,
            hop,
            window: WindowFunction::Rectangular,
        }
    }

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| (2.0 * PI * freq * k as f64 / fs).sin()).collect()
    }

    /// Direct evaluation of the windowed DFT sum.
    fn naive_frame(x: &[f64], g: &[f64], n: usize) -> Complex64 {
        let l = g.len();
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (&xk, &gk))| Complex64::from_polar(xk * gk, -2.0 * PI * (n * k) as f64 / l as f64))
            .sum()
    }

    #[test]
    fn default_shape_for_512_windows() {
        let m = stft(&vec![0.5; 512], &StftConfig::default()).unwrap();
        assert_eq!((m.frames, m.bins), (225, 33));
    }

    #[test]
    fn zero_segment() {
        let m = stft(&[0.0; 128], &StftConfig::default()).unwrap();
        assert!(m.data.iter().all(|c| c.norm() == 0.0));
        let img = to_log_image(&m).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn dc_segment() {
        let m = stft(&[1.0; 200], &rect(64, 8)).unwrap();
        for f in 0..m.frames {
            assert!((m.magnitude(f, 0) - 64.0).abs() < 1e-9);
            assert!((1..m.bins).all(|n| m.magnitude(f, n) < 1e-9));
        }
    }

    #[test]
    fn agrees_with_direct_sum() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        for window in [WindowFunction::Rectangular, WindowFunction::Hann] {
            let cfg = StftConfig {
                window_length: 32,
                hop: 7,
                window,
            };
            let g = window.coefficients(32);
            let m = stft(&x, &cfg).unwrap();
            assert_eq!(m.frames, (300 - 32) / 7 + 1);
            for f in [0, 5, m.frames - 1] {
                for n in 0..m.bins {
                    let want = naive_frame(&x[f * 7..f * 7 + 32], &g, n);
                    assert!((m.frame(f)[n] - want).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tone_peaks_at_expected_bin() {
        let x = tone(45.0, 360.0, 512);
        let m = stft(&x, &rect(64, 2)).unwrap();
        for f in 0..m.frames {
            let best = (0..m.bins)
                .max_by(|&a, &b| m.magnitude(f, a).total_cmp(&m.magnitude(f, b)))
                .unwrap();
            assert_eq!(best, 8);
        }
        let img = to_log_image(&m).unwrap();
        let row_sum = |r: usize| img.row(r).iter().sum::<f64>();
        let brightest = (0..img.height)
            .max_by(|&a, &b| row_sum(a).total_cmp(&row_sum(b)))
            .unwrap();
        assert_eq!(brightest, 8);
    }

    #[test]
    fn two_level_image() {
        let mut data = vec![Complex64::new(2.0, 0.0); 6];
        data[4] = Complex64::new(0.0, 7.0);
        let img = to_log_image(&StftMatrix {
            frames: 2,
            bins: 3,
            data,
        })
        .unwrap();
        let mut vals = img.pixels.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        assert_eq!(vals, vec![0.0, 1.0]);
    }

    #[test]
    fn config_errors() {
        assert!(stft(&[0.0; 10], &rect(16, 2)).is_err());
        assert!(stft(&[0.0; 100], &rect(16, 0)).is_err());
        assert!(stft(&[0.0; 100], &rect(16, 17)).is_err());
        assert!(stft(&[0.0; 100], &rect(15, 1)).is_err());
        assert!("triangle".parse::<WindowFunction>().is_err());
    }

    #[test]
    fn spectrogram_is_square_and_normalized() {
        let x: Vec<f64> = (0..512)
            .map(|i| (i as f64 * 0.3).sin() * (i as f64 / 50.0).cos())
            .collect();
        for side in [64, 256] {
            let img = spectrogram(
                &x,
                &SpectrogramConfig {
                    stft: StftConfig::default(),
                    image_side: side,
                },
            )
            .unwrap();
            assert_eq!((img.height, img.width), (side, side));
            assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
