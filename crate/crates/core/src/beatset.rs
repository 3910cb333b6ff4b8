//! Fixed-length beat windows around annotated fiducials.
//!
//! Segments can be cached on disk as a pair of files:
//!
//! * `<stem>.f64`: every segment's samples back to back, little-endian `f64`;
//! * `<stem>.idx`: a `# ecg2d-beats v1 window=<W>` line followed by one
//!   `<record> <class> <center>` line per segment, in the same order.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::wfdb::{map_symbol, Annotation, BeatClass};

/// Default window: 512 samples, about 1.42 s at 360 Hz.
pub const DEFAULT_WINDOW: usize = 512;

#[derive(Debug, Error)]
pub enum BeatsetError {
    #[error("window length must be even and positive, got {0}")]
    InvalidWindow(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed beat cache: {0}")]
    MalformedCache(String),
}

impl BeatsetError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            BeatsetError::InvalidWindow(_) => "InvalidWindow",
            BeatsetError::Io { .. } => "Io",
            BeatsetError::MalformedCache(_) => "MalformedCache",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatSegment {
    pub samples: Vec<f64>,
    pub label: BeatClass,
    pub record_name: String,
    pub center_index: usize,
}

/// Cuts one window of `window` samples per mapped beat, spanning
/// `[c - window/2, c + window/2)`; samples outside the signal are zero.
pub fn segment_beats(
    signal: &[f64],
    annotations: &[Annotation],
    window: usize,
    record_name: &str,
) -> Result<Vec<BeatSegment>, BeatsetError> {
    if window == 0 || !window.is_multiple_of(2) {
        return Err(BeatsetError::InvalidWindow(window));
    }
    let half = (window / 2) as i64;
    let n = signal.len() as i64;
    let segments = annotations
        .iter()
        .filter_map(|a| map_symbol(a.symbol_code).map(|c| (a.sample_index as i64, c)))
        .map(|(center, label)| {
            let start = center - half;
            let mut samples = vec![0.0; window];
            let lo = start.max(0);
            let hi = (start + window as i64).min(n);
            if lo < hi {
                let dst = (lo - start) as usize;
                samples[dst..dst + (hi - lo) as usize].copy_from_slice(&signal[lo as usize..hi as usize]);
            }
            BeatSegment {
                samples,
                label,
                record_name: record_name.to_string(),
                center_index: center as usize,
            }
        })
        .collect();
    Ok(segments)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BeatsetError + '_ {
    move |source| BeatsetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn cache_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("f64"), stem.with_extension("idx"))
}

/// Writes segments to `<stem>.f64` / `<stem>.idx`.
pub fn write_cache(stem: &Path, segments: &[BeatSegment]) -> Result<(), BeatsetError> {
    let window = segments.first().map_or(DEFAULT_WINDOW, |s| s.samples.len());
    if segments.iter().any(|s| s.samples.len() != window) {
        return Err(BeatsetError::MalformedCache("segments differ in length".into()));
    }
    let (data_path, idx_path) = cache_paths(stem);
    let mut data = BufWriter::new(fs::File::create(&data_path).map_err(io_err(&data_path))?);
    let mut idx = BufWriter::new(fs::File::create(&idx_path).map_err(io_err(&idx_path))?);
    writeln!(idx, "# ecg2d-beats v1 window={window}").map_err(io_err(&idx_path))?;
    for s in segments {
        for v in &s.samples {
            data.write_all(&v.to_le_bytes()).map_err(io_err(&data_path))?;
        }
        writeln!(idx, "{} {} {}", s.record_name, s.label, s.center_index).map_err(io_err(&idx_path))?;
    }
    data.flush().map_err(io_err(&data_path))?;
    idx.flush().map_err(io_err(&idx_path))?;
    Ok(())
}

/// Reads a cache written by [`write_cache`].
pub fn read_cache(stem: &Path) -> Result<Vec<BeatSegment>, BeatsetError> {
    let (data_path, idx_path) = cache_paths(stem);
    let bytes = fs::read(&data_path).map_err(io_err(&data_path))?;
    let file = fs::File::open(&idx_path).map_err(io_err(&idx_path))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| BeatsetError::MalformedCache("empty index".into()))?
        .map_err(io_err(&idx_path))?;
    let window: usize = first
        .strip_prefix("# ecg2d-beats v1 window=")
        .and_then(|w| w.trim().parse().ok())
        .ok_or_else(|| BeatsetError::MalformedCache(format!("bad index header `{first}`")))?;
    if window == 0 {
        return Err(BeatsetError::MalformedCache("zero window".into()));
    }
    let seg_bytes = window * 8;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(&idx_path))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [record, label, center] = parts[..] else {
            return Err(BeatsetError::MalformedCache(format!("bad index line `{line}`")));
        };
        let label: BeatClass = label.parse().map_err(BeatsetError::MalformedCache)?;
        let center_index = center
            .parse()
            .map_err(|_| BeatsetError::MalformedCache(format!("bad center `{center}`")))?;
        let chunk = bytes
            .get(i * seg_bytes..(i + 1) * seg_bytes)
            .ok_or_else(|| BeatsetError::MalformedCache("sample file too short".into()))?;
        let samples = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        out.push(BeatSegment {
            samples,
            label,
            record_name: record.to_string(),
            center_index,
        });
    }
    if bytes.len() != out.len() * seg_bytes {
        return Err(BeatsetError::MalformedCache(
            "sample file length does not match index".into(),
        ));
    }
    Ok(out)
}
