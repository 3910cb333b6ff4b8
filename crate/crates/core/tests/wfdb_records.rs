use std::path::{Path, PathBuf};
use std::time::Instant;

use ecg2d::wfdb::testing::{encode_212, encode_annotations, header_text};
use ecg2d::wfdb::{checksum, class_counts, read_annotations, read_record, read_record_unchecked, BeatClass, WfdbError};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mitdb")
}

#[test]
fn record_100_excerpt_decodes() {
    let rec = read_record_unchecked(&fixture_dir(), "100").unwrap();
    assert_eq!(rec.header.sampling_rate, 360.0);
    assert_eq!(rec.header.n_samples, 10);
    assert_eq!(rec.header.signals[0].description, "MLII");
    let mut ch0 = vec![995i16; 8];
    ch0.extend([1000, 997]);
    let mut ch1 = vec![1011i16; 8];
    ch1.extend([1008, 1008]);
    assert_eq!(rec.signals[0], ch0);
    assert_eq!(rec.signals[1], ch1);
    let mv = rec.physical(0);
    let want = [
        -0.145, -0.145, -0.145, -0.145, -0.145, -0.145, -0.145, -0.145, -0.12, -0.135,
    ];
    for (a, b) in mv.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((rec.physical(1)[9] - -0.08).abs() < 1e-12);
}

#[test]
fn excerpt_fails_full_record_checksum() {
    // the header carries checksums of the full 650000-sample record
    let err = read_record(&fixture_dir(), "100").unwrap_err();
    assert!(matches!(
        err,
        WfdbError::ChecksumMismatch {
            signal: 0,
            expected: -22131,
            ..
        }
    ));
    assert_eq!(ecg2d::Error::from(err).name(), "wfdb::ChecksumMismatch");
}

#[test]
fn full_length_synthetic_record() {
    let n = 650_000;
    let ch0: Vec<i16> = (0..n).map(|i| ((i * 7919) % 4096) as i16 - 2048).collect();
    let ch1: Vec<i16> = (0..n).map(|i| ((i as f64 * 0.01).sin() * 600.0) as i16).collect();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("syn.dat"), encode_212(&ch0, &ch1)).unwrap();
    std::fs::write(
        dir.path().join("syn.hea"),
        header_text("syn", 360.0, n, [checksum(&ch0), checksum(&ch1)]),
    )
    .unwrap();
    let codes = [1u8, 1, 8, 5, 1, 2, 3, 12, 31, 10, 28, 1];
    let events: Vec<(u8, u64)> = (0..2000)
        .map(|i| (codes[i % codes.len()], 300 + (i as u64 % 5) * 400))
        .collect();
    std::fs::write(dir.path().join("syn.atr"), encode_annotations(&events)).unwrap();

    let t = Instant::now();
    let rec = read_record(dir.path(), "syn").unwrap();
    let ann = read_annotations(dir.path(), "syn", "atr").unwrap();
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert_eq!(rec.signals[0], ch0);
    assert_eq!(rec.signals[1], ch1);
    assert_eq!(ann.len(), 2000);
    let mut want = [0usize; BeatClass::COUNT];
    for &(code, _) in &events {
        if let Some(c) = ecg2d::wfdb::map_symbol(code) {
            want[c.index()] += 1;
        }
    }
    assert_eq!(class_counts(&ann), want);
    let total: u64 = events.iter().map(|e| e.1).sum();
    assert_eq!(ann.last().unwrap().sample_index, total);
}

/// Checks against real MIT-BIH files when `ECG2D_DATA_DIR` points at them.
#[test]
fn physionet_records_when_available() {
    let Some(dir) = std::env::var_os("ECG2D_DATA_DIR").map(PathBuf::from) else {
        eprintln!("ECG2D_DATA_DIR not set; skipping");
        return;
    };
    let rec = read_record(&dir, "100").unwrap();
    assert_eq!(rec.header.n_samples, 650_000);
    assert_eq!(rec.signals[0].len(), 650_000);
    let counts = class_counts(&read_annotations(&dir, "100", "atr").unwrap());
    assert_eq!(counts[BeatClass::Nor.index()], 2239);
    assert_eq!(counts[BeatClass::Apc.index()], 33);
    assert_eq!(counts[BeatClass::Pvc.index()], 1);
    for name in ["101", "103", "105", "106"] {
        read_record(&dir, name).unwrap();
    }
}
