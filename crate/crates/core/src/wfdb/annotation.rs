//! MIT annotation file reader.
//!
//! The file is a stream of little-endian 16-bit words. The top six bits of a
//! word are the annotation code and the low ten bits the sample increment
//! since the previous annotation. Codes 59..=63 are escapes that modify the
//! annotation stream instead of emitting an annotation.

use super::WfdbError;

const SKIP: u8 = 59;
const NUM: u8 = 60;
const SUB: u8 = 61;
const CHN: u8 = 62;
const AUX: u8 = 63;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub sample_index: u64,
    pub symbol_code: u8,
    pub channel: u8,
    pub subtype: i8,
    pub num: i8,
    pub aux: Option<Vec<u8>>,
}

struct Words<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Words<'a> {
    fn next_word(&mut self) -> Result<Option<u16>, WfdbError> {
        match self.data.len() - self.pos {
            0 => Ok(None),
            1 => Err(WfdbError::MalformedAnnotation(format!(
                "dangling byte at offset {}",
                self.pos
            ))),
            _ => {
                let w = u16::from_le_bytes([self.data[self.pos], self.data[self.pos + 1]]);
                self.pos += 2;
                Ok(Some(w))
            }
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WfdbError> {
        if self.data.len() - self.pos < n {
            return Err(WfdbError::MalformedAnnotation(format!(
                "truncated {what} payload at offset {}",
                self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

/// Parses an MIT-format annotation file body.
pub fn parse_annotations(data: &[u8]) -> Result<Vec<Annotation>, WfdbError> {
    let mut words = Words { data, pos: 0 };
    let mut out: Vec<Annotation> = Vec::new();
    let mut time: i64 = 0;
    let mut channel: u8 = 0;
    let mut num: i8 = 0;

    while let Some(word) = words.next_word()? {
        let code = (word >> 10) as u8;
        let field = word & 0x03FF;
        match code {
            0 if field == 0 => break,
            SKIP => {
                let b = words.take(4, "SKIP")?;
                // PDP-11 long: high 16-bit word first, each word little-endian
                let hi = u32::from(u16::from_le_bytes([b[0], b[1]]));
                let lo = u32::from(u16::from_le_bytes([b[2], b[3]]));
                time += i64::from(((hi << 16) | lo) as i32);
                if time < 0 {
                    return Err(WfdbError::MalformedAnnotation(
                        "SKIP moves time before the record start".into(),
                    ));
                }
            }
            NUM => {
                num = field as i8;
                if let Some(last) = out.last_mut() {
                    last.num = num;
                }
            }
            SUB => {
                if let Some(last) = out.last_mut() {
                    last.subtype = field as i8;
                }
            }
            CHN => {
                channel = field as u8;
                if let Some(last) = out.last_mut() {
                    last.channel = channel;
                }
            }
            AUX => {
                let len = field as usize;
                let padded = len + (len & 1);
                let bytes = words.take(padded, "AUX")?;
                if let Some(last) = out.last_mut() {
                    last.aux = Some(bytes[..len].to_vec());
                }
            }
            _ => {
                time += i64::from(field);
                out.push(Annotation {
                    sample_index: time as u64,
                    symbol_code: code,
                    channel,
                    subtype: 0,
                    num,
                    aux: None,
                });
            }
        }
    }
    Ok(out)
}
