//! Orthogonal Daubechies filter banks and the Mallat cascade.
//!
//! Each analysis stage extends its input by half-sample symmetric reflection
//! and keeps `floor((n + F - 1) / 2)` coefficients per band, where `F` is the
//! filter length. That is enough for the transposed synthesis stage to
//! rebuild the input exactly without any extension of its own.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::DenoiseError;

/// Supported Daubechies family members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wavelet {
    Db1,
    Db2,
    Db4,
    Db6,
    Db8,
}

// Scaling (reconstruction low-pass) coefficients.
const DB1: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
const DB2: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];
const DB6: [f64; 12] = [
    0.11154074335010947,
    0.49462389039845306,
    0.7511339080210954,
    0.31525035170919763,
    -0.22626469396543983,
    -0.12976686756726194,
    0.09750160558732304,
    0.027522865530305727,
    -0.03158203931748603,
    0.0005538422011614961,
    0.004777257510945511,
    -0.0010773010853084796,
];
const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

impl Wavelet {
    pub const ALL: [Wavelet; 5] = [Wavelet::Db1, Wavelet::Db2, Wavelet::Db4, Wavelet::Db6, Wavelet::Db8];

    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Db1 => "db1",
            Wavelet::Db2 => "db2",
            Wavelet::Db4 => "db4",
            Wavelet::Db6 => "db6",
            Wavelet::Db8 => "db8",
        }
    }

    pub fn scaling_filter(self) -> &'static [f64] {
        match self {
            Wavelet::Db1 => &DB1,
            Wavelet::Db2 => &DB2,
            Wavelet::Db4 => &DB4,
            Wavelet::Db6 => &DB6,
            Wavelet::Db8 => &DB8,
        }
    }

    pub fn filter_len(self) -> usize {
        self.scaling_filter().len()
    }

    /// Decomposition low-pass and high-pass filters.
    pub fn analysis_filters(self) -> (Vec<f64>, Vec<f64>) {
        let rec = self.scaling_filter();
        let f = rec.len();
        let lo: Vec<f64> = rec.iter().rev().copied().collect();
        let hi = (0..f)
            .map(|j| {
                let s = if j % 2 == 0 { -1.0 } else { 1.0 };
                s * lo[f - 1 - j]
            })
            .collect();
        (lo, hi)
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Wavelet {
    type Err = DenoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = if key == "haar" { "db1".to_string() } else { key };
        Wavelet::ALL
            .iter()
            .copied()
            .find(|w| w.name() == key)
            .ok_or_else(|| DenoiseError::UnknownWavelet(s.to_string()))
    }
}

/// Multi-level decomposition of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    /// Approximation band at the deepest level.
    pub approximation: Vec<f64>,
    /// Detail bands, finest first: `details[0]` is level 1.
    pub details: Vec<Vec<f64>>,
    pub wavelet: Wavelet,
    pub original_length: usize,
}

impl WaveletCoeffs {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Input length of every analysis stage, `[original_length, len_1, ..., len_J]`.
    pub fn stage_lengths(&self) -> Vec<usize> {
        stage_lengths(self.original_length, self.wavelet.filter_len(), self.levels())
    }

    fn check(&self) -> Result<(), DenoiseError> {
        let lens = self.stage_lengths();
        let j = self.levels();
        if j == 0 {
            return Err(DenoiseError::InconsistentCoeffs("no detail levels".into()));
        }
        for (l, d) in self.details.iter().enumerate() {
            if d.len() != lens[l + 1] {
                return Err(DenoiseError::InconsistentCoeffs(format!(
                    "detail level {} has {} coefficients, expected {}",
                    l + 1,
                    d.len(),
                    lens[l + 1]
                )));
            }
        }
        if self.approximation.len() != lens[j] {
            return Err(DenoiseError::InconsistentCoeffs(format!(
                "approximation has {} coefficients, expected {}",
                self.approximation.len(),
                lens[j]
            )));
        }
        Ok(())
    }
}

fn stage_lengths(n: usize, filter_len: usize, levels: usize) -> Vec<usize> {
    let mut lens = Vec::with_capacity(levels + 1);
    let mut len = n;
    lens.push(len);
    for _ in 0..levels {
        len = (len + filter_len - 1) / 2;
        lens.push(len);
    }
    lens
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = lo.len();
    let out_len = (n + f - 1) / 2;
    let mut a = Vec::with_capacity(out_len);
    let mut d = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let base = 2 * k as isize + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let i = base - j as isize;
            let v = if i >= 0 && (i as usize) < n {
                x[i as usize]
            } else {
                x[reflect(i, n)]
            };
            sa += lo[j] * v;
            sd += hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], lo: &[f64], hi: &[f64], out_len: usize) -> Vec<f64> {
    let f = lo.len();
    let mut out = vec![0.0; out_len];
    for (k, (&ak, &dk)) in a.iter().zip(d).enumerate() {
        let base = 2 * k + 1;
        // out[m] += a[k] * lo[base - m] for 0 <= base - m < f
        let m_hi = base.min(out_len.saturating_sub(1));
        let m_lo = (base + 1).saturating_sub(f);
        if m_lo > m_hi || m_lo >= out_len {
            continue;
        }
        for (m, o) in out.iter_mut().enumerate().take(m_hi + 1).skip(m_lo) {
            let j = base - m;
            *o += ak * lo[j] + dk * hi[j];
        }
    }
    out
}

/// Forward transform of `signal` to `levels` levels.
pub fn dwt(signal: &[f64], wavelet: Wavelet, levels: usize) -> Result<WaveletCoeffs, DenoiseError> {
    if levels == 0 || levels >= usize::BITS as usize || signal.len() < (1usize << levels) {
        return Err(DenoiseError::TooShort {
            len: signal.len(),
            levels,
        });
    }
    let (lo, hi) = wavelet.analysis_filters();
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&current, &lo, &hi);
        details.push(d);
        current = a;
    }
    Ok(WaveletCoeffs {
        approximation: current,
        details,
        wavelet,
        original_length: signal.len(),
    })
}

/// Inverse transform; the output has `coeffs.original_length` samples.
pub fn idwt(coeffs: &WaveletCoeffs) -> Result<Vec<f64>, DenoiseError> {
    coeffs.check()?;
    let (lo, hi) = coeffs.wavelet.analysis_filters();
    let lens = coeffs.stage_lengths();
    let mut current = coeffs.approximation.clone();
    for level in (0..coeffs.levels()).rev() {
        current = synthesis_step(&current, &coeffs.details[level], &lo, &hi, lens[level]);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn filters_are_orthonormal_with_vanishing_moments() {
        for w in Wavelet::ALL {
            let h = w.scaling_filter();
            let f = h.len();
            let sum: f64 = h.iter().sum();
            assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12, "{w} sum");
            for shift in (0..f).step_by(2) {
                let dot: f64 = (0..f - shift).map(|i| h[i] * h[i + shift]).sum();
                let want = if shift == 0 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "{w} shift {shift}: {dot}");
            }
            let (_, hi) = w.analysis_filters();
            for p in 0..f / 2 {
                let m: f64 = hi.iter().enumerate().map(|(j, g)| g * (j as f64).powi(p as i32)).sum();
                let scale = (f as f64).powi(p as i32);
                assert!(m.abs() / scale < 1e-9, "{w} moment {p}: {m}");
            }
        }
    }

    // Reference values from PyWavelets `wavedec(x, mode="symmetric")`.
    #[test]
    fn matches_reference_symmetric_mode() {
        let x: Vec<f64> = (0..100).map(|n| ((n * 37) % 101) as f64 / 10.0 - 5.0).collect();
        let c = dwt(&x, Wavelet::Db6, 3).unwrap();
        let lens: Vec<usize> = c.details.iter().map(Vec::len).collect();
        assert_eq!(lens, [55, 33, 22]);
        assert_eq!(c.approximation.len(), 22);
        let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        close(c.approximation[0], -3.1892239535609153);
        close(c.approximation[2], -0.028063160489436356);
        close(c.approximation[21], 0.1016908171069273);
        close(c.details[2][1], 1.5889834221148946);
        close(c.details[1][2], -3.0904560261706746);
        close(c.details[0][0], 2.0894347982225483);
        close(c.details[0][54], -4.330239891134956);

        let x: Vec<f64> = (0..1000).map(|n| ((n * 37) % 101) as f64 / 10.0 - 5.0).collect();
        let c = dwt(&x, Wavelet::Db4, 5).unwrap();
        let lens: Vec<usize> = c.details.iter().rev().map(Vec::len).collect();
        assert_eq!(lens, [38, 69, 131, 255, 503]);
        close(c.approximation[2], -7.869874211343155);
        close(c.details[4][4], 1.0156423843944256);
        close(c.details[0][7], -5.127822425519366);
    }

    #[test]
    fn constant_signal_has_zero_details() {
        for w in Wavelet::ALL {
            let c = dwt(&vec![3.25; 300], w, 4).unwrap();
            for d in &c.details {
                assert!(d.iter().all(|v| v.abs() < 1e-10), "{w}");
            }
        }
    }

    #[test]
    fn zero_signal_round_trip() {
        let c = dwt(&[0.0; 256], Wavelet::Db6, 5).unwrap();
        assert!(c
            .approximation
            .iter()
            .chain(c.details.iter().flatten())
            .all(|&v| v == 0.0));
        assert_eq!(idwt(&c).unwrap(), vec![0.0; 256]);
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in Wavelet::ALL {
            for &n in &[64usize, 65, 100, 257, 1024, 3001] {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let levels = (n as f64).log2().floor().min(6.0) as usize;
                let c = dwt(&x, w, levels).unwrap();
                let y = idwt(&c).unwrap();
                assert!(max_abs_diff(&x, &y) < 1e-10, "{w} n={n}");
            }
        }
    }

    #[test]
    fn drift_lives_in_the_approximation() {
        let fs = 360.0;
        let n = 360 * 60;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 0.2 * (i as f64 + 0.5) / fs).cos())
            .collect();
        let mut c = dwt(&x, Wavelet::Db6, 8).unwrap();
        c.approximation.iter_mut().for_each(|v| *v = 0.0);
        let y = idwt(&c).unwrap();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 0.05, "residual {peak}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            dwt(&[1.0; 15], Wavelet::Db6, 4),
            Err(DenoiseError::TooShort { .. })
        ));
        assert!(matches!(
            dwt(&[1.0; 16], Wavelet::Db6, 0),
            Err(DenoiseError::TooShort { .. })
        ));
        assert!(dwt(&[1.0; 16], Wavelet::Db6, 4).is_ok());
        assert!(matches!(
            "sym4".parse::<Wavelet>(),
            Err(DenoiseError::UnknownWavelet(_))
        ));
        assert_eq!("DB6".parse::<Wavelet>().unwrap(), Wavelet::Db6);
        let mut c = dwt(&[1.0; 64], Wavelet::Db2, 3).unwrap();
        c.details[1].pop();
        assert!(matches!(idwt(&c), Err(DenoiseError::InconsistentCoeffs(_))));
    }
}
