//! MIT-BIH record ingestion: headers, format-212 signals and annotations.

mod annotation;
pub mod codes;
mod header;
mod signal;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use annotation::{parse_annotations, Annotation};
pub use codes::{map_symbol, BeatClass};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use signal::{checksum, decode_212, Record, BYTES_PER_FRAME};

#[derive(Debug, Error)]
pub enum WfdbError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported signal format {0} (only 212 is supported)")]
    UnsupportedFormat(u16),
    #[error("truncated signal data: need {expected} bytes, have {actual}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("malformed annotation stream: {0}")]
    MalformedAnnotation(String),
    #[error("checksum mismatch on signal {signal}: header {expected}, computed {computed}")]
    ChecksumMismatch {
        signal: usize,
        expected: i16,
        computed: i16,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl WfdbError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            WfdbError::MalformedHeader(_) => "MalformedHeader",
            WfdbError::UnsupportedFormat(_) => "UnsupportedFormat",
            WfdbError::TruncatedData { .. } => "TruncatedData",
            WfdbError::MalformedAnnotation(_) => "MalformedAnnotation",
            WfdbError::ChecksumMismatch { .. } => "ChecksumMismatch",
            WfdbError::Io { .. } => "Io",
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, WfdbError> {
    std::fs::read(path).map_err(|source| WfdbError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `<dir>/<name>.hea` and its signal file. Checksums are verified.
pub fn read_record(dir: &Path, name: &str) -> Result<Record, WfdbError> {
    let record = read_record_unchecked(dir, name)?;
    record.verify_checksums()?;
    Ok(record)
}

/// Like [`read_record`] but leaves checksum verification to the caller.
pub fn read_record_unchecked(dir: &Path, name: &str) -> Result<Record, WfdbError> {
    let hea_path = dir.join(format!("{name}.hea"));
    let text = String::from_utf8(read_file(&hea_path)?)
        .map_err(|_| WfdbError::MalformedHeader("header is not valid UTF-8".into()))?;
    let header = parse_header(&text)?;
    let data = read_file(&dir.join(&header.signals[0].file_name))?;
    Record::from_parts(header, &data)
}

/// Reads `<dir>/<name>.<ext>` as an MIT annotation file.
pub fn read_annotations(dir: &Path, name: &str, ext: &str) -> Result<Vec<Annotation>, WfdbError> {
    parse_annotations(&read_file(&dir.join(format!("{name}.{ext}")))?)
}

/// Per-class counts of the annotations that map onto a [`BeatClass`].
pub fn class_counts(annotations: &[Annotation]) -> [usize; BeatClass::COUNT] {
    let mut counts = [0; BeatClass::COUNT];
    for a in annotations {
        if let Some(c) = map_symbol(a.symbol_code) {
            counts[c.index()] += 1;
        }
    }
    counts
}

/// Writers for synthetic test records. Not part of the supported surface.
#[doc(hidden)]
pub mod testing {
    /// Packs two equal-length channels of 12-bit samples into format-212 bytes.
    pub fn encode_212(ch0: &[i16], ch1: &[i16]) -> Vec<u8> {
        assert_eq!(ch0.len(), ch1.len());
        let mut out = Vec::with_capacity(ch0.len() * 3);
        for (&a, &b) in ch0.iter().zip(ch1) {
            let a = (a as u16) & 0x0FFF;
            let b = (b as u16) & 0x0FFF;
            out.push((a & 0xFF) as u8);
            out.push((((a >> 8) & 0x0F) | ((b >> 8) << 4)) as u8);
            out.push((b & 0xFF) as u8);
        }
        out
    }

    /// Encodes `(code, increment)` pairs, using SKIP for increments above 1023.
    pub fn encode_annotations(events: &[(u8, u64)]) -> Vec<u8> {
        let mut out = Vec::new();
        for &(code, delta) in events {
            let field = if delta > 0x3FF {
                out.extend((59u16 << 10).to_le_bytes());
                let d = delta as u32;
                out.extend(((d >> 16) as u16).to_le_bytes());
                out.extend((d as u16).to_le_bytes());
                0
            } else {
                delta as u16
            };
            out.extend((((code as u16) << 10) | field).to_le_bytes());
        }
        out.extend([0, 0]);
        out
    }

    /// Header text for a synthetic two-signal format-212 record.
    pub fn header_text(name: &str, fs: f64, n_samples: usize, checksums: [i16; 2]) -> String {
        format!(
            "{name} 2 {fs} {n_samples}\n\
             {name}.dat 212 200 11 1024 0 {} 0 MLII\n\
             {name}.dat 212 200 11 1024 0 {} 0 V5\n",
            checksums[0], checksums[1]
        )
    }
}
