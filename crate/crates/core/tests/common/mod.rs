#![allow(dead_code)]

pub mod gradcheck;
pub mod metrics_oracle;

use std::f64::consts::PI;

use ecg2d::nn::{CnnSpec, HeadMode};
use ecg2d::pipeline::{Origin, Sample};
use ecg2d::spectro::{spectrogram, SpectrogramConfig};
use ecg2d::BeatClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 512-sample beat-like window whose dominant tone depends on the class.
pub fn synthetic_segment(class: usize, variant: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(variant * 31 + class as u64);
    let tone = 8.0 + 18.0 * class as f64;
    let phase = rng.gen_range(0.0..2.0 * PI);
    (0..512)
        .map(|n| {
            let t = n as f64 / 360.0;
            let envelope = (-((n as f64 - 256.0) / 90.0).powi(2)).exp();
            envelope * (2.0 * PI * tone * t + phase).sin() + 0.05 * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

/// `per_class` native samples for each of the eight classes, ids in order.
pub fn synthetic_samples(per_class: usize, side: usize) -> Vec<Sample> {
    let cfg = SpectrogramConfig {
        image_side: side,
        ..SpectrogramConfig::default()
    };
    let mut out = Vec::new();
    for v in 0..per_class {
        for class in 0..BeatClass::COUNT {
            let image = spectrogram(&synthetic_segment(class, v as u64), &cfg).unwrap();
            out.push(Sample {
                id: out.len() as u64,
                label: BeatClass::ALL[class],
                image,
                origin: Origin::Native,
                record: "synthetic".into(),
                center_index: v,
            });
        }
    }
    out
}

pub fn tiny_spec(head: HeadMode) -> CnnSpec {
    CnnSpec {
        input_side: 8,
        input_channels: 1,
        conv_channels: vec![2, 3],
        hidden_units: 5,
        n_classes: 8,
        head,
    }
}
