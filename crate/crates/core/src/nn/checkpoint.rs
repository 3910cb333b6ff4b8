//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "ECG2DCNN"
//! version      u32      1
//! input_side   u32
//! in_channels  u32
//! head         u8       0 = dense, 1 = global average pool
//! n_conv       u32, then n_conv x u32 channel counts
//! hidden       u32
//! classes      u32
//! n_params     u64      total scalar count
//! params       n_params x f64, in layer order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::{CnnModel, CnnSpec, HeadMode};
use super::{NnError, Tensor};

const MAGIC: &[u8; 8] = b"ECG2DCNN";
const VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NnError + '_ {
    move |source| NnError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_checkpoint<W: Write>(model: &CnnModel, mut w: W) -> std::io::Result<()> {
    let spec = model.spec();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.input_side as u32).to_le_bytes())?;
    w.write_all(&(spec.input_channels as u32).to_le_bytes())?;
    w.write_all(&[match spec.head {
        HeadMode::Dense => 0u8,
        HeadMode::GlobalAvgPool => 1u8,
    }])?;
    w.write_all(&(spec.conv_channels.len() as u32).to_le_bytes())?;
    for &c in &spec.conv_channels {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    w.write_all(&(spec.hidden_units as u32).to_le_bytes())?;
    w.write_all(&(spec.n_classes as u32).to_le_bytes())?;
    w.write_all(&(spec.param_count() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * 4096);
    for p in model.params() {
        for chunk in p.data().chunks(4096) {
            buf.clear();
            chunk.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
            w.write_all(&buf)?;
        }
    }
    w.flush()
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| NnError::MalformedCheckpoint("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<CnnModel, NnError> {
    let bad = |m: &str| NnError::MalformedCheckpoint(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NnError::MalformedCheckpoint(format!("unsupported version {version}")));
    }
    let input_side = read_u32(&mut r)? as usize;
    let input_channels = read_u32(&mut r)? as usize;
    let mut head = [0u8; 1];
    r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
    let head = match head[0] {
        0 => HeadMode::Dense,
        1 => HeadMode::GlobalAvgPool,
        h => return Err(NnError::MalformedCheckpoint(format!("unknown head tag {h}"))),
    };
    let n_conv = read_u32(&mut r)? as usize;
    if n_conv > 32 {
        return Err(bad("implausible number of conv blocks"));
    }
    let conv_channels = (0..n_conv)
        .map(|_| read_u32(&mut r).map(|c| c as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let hidden_units = read_u32(&mut r)? as usize;
    let n_classes = read_u32(&mut r)? as usize;
    let spec = CnnSpec {
        input_side,
        input_channels,
        conv_channels,
        hidden_units,
        n_classes,
        head,
    };
    spec.validate()
        .map_err(|e| NnError::MalformedCheckpoint(format!("invalid architecture: {e}")))?;
    let mut count = [0u8; 8];
    r.read_exact(&mut count).map_err(|_| bad("truncated header"))?;
    if u64::from_le_bytes(count) != spec.param_count() as u64 {
        return Err(bad("parameter count does not match architecture"));
    }
    let mut params = Vec::new();
    let mut buf = vec![0u8; 8 * 4096];
    for shape in spec.param_shapes() {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        while data.len() < n {
            let take = (n - data.len()).min(4096);
            let bytes = &mut buf[..8 * take];
            r.read_exact(bytes).map_err(|_| bad("truncated parameters"))?;
            data.extend(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))),
            );
        }
        params.push(Tensor::from_vec(&shape, data)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|_| bad("read error"))? != 0 {
        return Err(bad("trailing bytes"));
    }
    CnnModel::from_params(spec, params)
}

pub fn save_checkpoint(model: &CnnModel, path: &Path) -> Result<(), NnError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_checkpoint(model, BufWriter::new(file)).map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<CnnModel, NnError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_checkpoint(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(head: HeadMode) -> CnnSpec {
        CnnSpec {
            input_side: 8,
            input_channels: 1,
            conv_channels: vec![2, 3],
            hidden_units: 5,
            n_classes: 8,
            head,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for head in [HeadMode::Dense, HeadMode::GlobalAvgPool] {
            let m = CnnModel::init(tiny(head), 11).unwrap();
            let mut bytes = Vec::new();
            write_checkpoint(&m, &mut bytes).unwrap();
            let back = read_checkpoint(bytes.as_slice()).unwrap();
            assert_eq!(back, m);
            let mut again = Vec::new();
            write_checkpoint(&back, &mut again).unwrap();
            assert_eq!(bytes, again);
        }
    }

    #[test]
    fn header_layout() {
        let m = CnnModel::zeros(tiny(HeadMode::Dense)).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"ECG2DCNN");
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &8u32.to_le_bytes());
        assert_eq!(bytes[20], 0);
        let header = 8 + 4 * 3 + 1 + 4 * 3 + 4 * 2 + 8;
        assert_eq!(bytes.len(), header + 8 * m.spec().param_count());
    }

    #[test]
    fn rejects_corruption() {
        let m = CnnModel::init(tiny(HeadMode::Dense), 1).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad_magic.as_slice()),
            Err(NnError::MalformedCheckpoint(_))
        ));
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            read_checkpoint(truncated),
            Err(NnError::MalformedCheckpoint(_))
        ));
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            read_checkpoint(trailing.as_slice()),
            Err(NnError::MalformedCheckpoint(_))
        ));
    }
}
