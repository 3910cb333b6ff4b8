//! Format-212 sample decoding and checksum verification.

use super::{RecordHeader, WfdbError};

/// Bytes per interleaved (ch0, ch1) frame.
pub const BYTES_PER_FRAME: usize = 3;

#[inline]
fn sign_extend_12(v: u16) -> i16 {
    if v >= 2048 {
        v as i16 - 4096
    } else {
        v as i16
    }
}

/// Decodes `n_samples` frames of two interleaved 12-bit channels.
///
/// Each frame is three bytes: the low byte of sample 0, a byte holding the
/// high nibbles of both samples (sample 0 in the low nibble), and the low
/// byte of sample 1. Trailing bytes beyond `3 * n_samples` are ignored.
pub fn decode_212(data: &[u8], n_samples: usize) -> Result<(Vec<i16>, Vec<i16>), WfdbError> {
    let needed = n_samples * BYTES_PER_FRAME;
    if data.len() < needed {
        return Err(WfdbError::TruncatedData {
            expected: needed,
            actual: data.len(),
        });
    }
    let mut ch0 = Vec::with_capacity(n_samples);
    let mut ch1 = Vec::with_capacity(n_samples);
    for frame in data[..needed].chunks_exact(BYTES_PER_FRAME) {
        let (b0, b1, b2) = (u16::from(frame[0]), u16::from(frame[1]), u16::from(frame[2]));
        ch0.push(sign_extend_12(b0 | ((b1 & 0x0F) << 8)));
        ch1.push(sign_extend_12(b2 | ((b1 & 0xF0) << 4)));
    }
    Ok((ch0, ch1))
}

/// WFDB checksum: the sample sum truncated to 16 bits.
pub fn checksum(samples: &[i16]) -> i16 {
    samples.iter().fold(0i64, |acc, &s| acc.wrapping_add(i64::from(s))) as i16
}

/// A decoded two-channel record.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub header: RecordHeader,
    /// Raw samples (adu), one vector per channel.
    pub signals: Vec<Vec<i16>>,
}

impl Record {
    /// Decodes the signal file body for `header`; lengths are checked, checksums are not.
    pub fn from_parts(header: RecordHeader, data: &[u8]) -> Result<Record, WfdbError> {
        let (ch0, ch1) = decode_212(data, header.n_samples)?;
        Ok(Record {
            header,
            signals: vec![ch0, ch1],
        })
    }

    /// Compares every channel's truncated sum with the header checksum.
    pub fn verify_checksums(&self) -> Result<(), WfdbError> {
        for (i, (spec, sig)) in self.header.signals.iter().zip(&self.signals).enumerate() {
            if let Some(expected) = spec.checksum {
                let computed = checksum(sig);
                if computed != expected {
                    return Err(WfdbError::ChecksumMismatch {
                        signal: i,
                        expected,
                        computed,
                    });
                }
            }
        }
        Ok(())
    }

    /// Channel `ch` in physical units.
    pub fn physical(&self, ch: usize) -> Vec<f64> {
        let spec = &self.header.signals[ch];
        self.signals[ch].iter().map(|&s| spec.to_physical(s)).collect()
    }
}
