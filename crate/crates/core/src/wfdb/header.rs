//! `.hea` header parsing for single-segment, two-signal format-212 records.

use super::WfdbError;

/// Per-signal header line.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u16,
    /// ADC units per physical unit (adu/mV for MIT-BIH).
    pub adc_gain: f64,
    /// Sample value corresponding to 0 physical units; defaults to `adc_zero`.
    pub baseline: i32,
    pub units: String,
    pub adc_resolution: u32,
    pub adc_zero: i32,
    pub initial_value: i32,
    pub checksum: Option<i16>,
    pub description: String,
}

impl SignalSpec {
    /// Converts a raw sample to physical units.
    pub fn to_physical(&self, adu: i16) -> f64 {
        (f64::from(adu) - f64::from(self.baseline)) / self.adc_gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub sampling_rate: f64,
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
    pub comments: Vec<String>,
}

const DEFAULT_GAIN: f64 = 200.0;
const DEFAULT_FS: f64 = 250.0;
const SUPPORTED_FORMAT: u16 = 212;
const EXPECTED_SIGNALS: usize = 2;

fn malformed(msg: impl Into<String>) -> WfdbError {
    WfdbError::MalformedHeader(msg.into())
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T, WfdbError> {
    tok.parse().map_err(|_| malformed(format!("invalid {what} `{tok}`")))
}

/// Parses the text of a WFDB header file.
pub fn parse_header(text: &str) -> Result<RecordHeader, WfdbError> {
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !line.is_empty() {
            lines.push(line);
        }
    }
    let (record_line, signal_lines) = lines.split_first().ok_or_else(|| malformed("empty header"))?;

    let mut toks = record_line.split_whitespace();
    let name_tok = toks.next().ok_or_else(|| malformed("missing record name"))?;
    if name_tok.contains('/') {
        return Err(malformed("multi-segment records are not supported"));
    }
    let n_signals: usize = parse_num(
        toks.next().ok_or_else(|| malformed("missing signal count"))?,
        "signal count",
    )?;
    let sampling_rate = match toks.next() {
        Some(tok) => {
            let freq = tok.split(['/', '(']).next().unwrap_or(tok);
            parse_num::<f64>(freq, "sampling frequency")?
        }
        None => DEFAULT_FS,
    };
    if sampling_rate.is_nan() || sampling_rate <= 0.0 {
        return Err(malformed("sampling frequency must be positive"));
    }
    let n_samples: usize = parse_num(
        toks.next().ok_or_else(|| malformed("missing sample count"))?,
        "sample count",
    )?;

    if signal_lines.len() != n_signals {
        return Err(malformed(format!(
            "record line declares {n_signals} signals but {} signal lines follow",
            signal_lines.len()
        )));
    }
    let signals = signal_lines
        .iter()
        .map(|l| parse_signal_line(l))
        .collect::<Result<Vec<_>, _>>()?;
    if n_signals != EXPECTED_SIGNALS {
        return Err(malformed(format!(
            "expected {EXPECTED_SIGNALS} signals, found {n_signals}"
        )));
    }
    if signals.windows(2).any(|w| w[0].file_name != w[1].file_name) {
        return Err(malformed("format-212 signals must share one data file"));
    }

    Ok(RecordHeader {
        record_name: name_tok.to_string(),
        n_signals,
        sampling_rate,
        n_samples,
        signals,
        comments,
    })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec, WfdbError> {
    let mut toks = line.split_whitespace();
    let file_name = toks
        .next()
        .ok_or_else(|| malformed("missing signal file name"))?
        .to_string();
    let fmt_tok = toks.next().ok_or_else(|| malformed("missing format"))?;
    let digits: String = fmt_tok.chars().take_while(|c| c.is_ascii_digit()).collect();
    let format: u16 = parse_num(&digits, "format")?;
    if format != SUPPORTED_FORMAT {
        return Err(WfdbError::UnsupportedFormat(format));
    }
    if digits.len() != fmt_tok.len() {
        return Err(malformed(format!(
            "samples-per-frame, skew and offset modifiers are not supported (`{fmt_tok}`)"
        )));
    }

    let mut adc_gain = DEFAULT_GAIN;
    let mut baseline = None;
    let mut units = "mV".to_string();
    if let Some(tok) = toks.next() {
        let (gain_part, unit_part) = match tok.split_once('/') {
            Some((g, u)) => (g, Some(u)),
            None => (tok, None),
        };
        let gain_str = match gain_part.split_once('(') {
            Some((g, rest)) => {
                let b = rest
                    .strip_suffix(')')
                    .ok_or_else(|| malformed(format!("unterminated baseline in `{tok}`")))?;
                baseline = Some(parse_num::<i32>(b, "baseline")?);
                g
            }
            None => gain_part,
        };
        let g: f64 = parse_num(gain_str, "gain")?;
        if g != 0.0 {
            adc_gain = g;
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }
    let adc_resolution = match toks.next() {
        Some(t) => parse_num(t, "ADC resolution")?,
        None => 12,
    };
    let adc_zero = match toks.next() {
        Some(t) => parse_num(t, "ADC zero")?,
        None => 0,
    };
    let initial_value = match toks.next() {
        Some(t) => parse_num(t, "initial value")?,
        None => adc_zero,
    };
    let checksum = match toks.next() {
        Some(t) => Some(parse_num::<i16>(t, "checksum")?),
        None => None,
    };
    // block size is unused for format 212
    let _ = toks.next();
    let description = toks.collect::<Vec<_>>().join(" ");

    Ok(SignalSpec {
        file_name,
        format,
        adc_gain,
        baseline: baseline.unwrap_or(adc_zero),
        units,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        description,
    })
}
