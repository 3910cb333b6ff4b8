//! Labelled spectrogram samples and their assembly from records.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::PipelineError;
use crate::augment::{crop_augment, crop_plan, AugmentConfig, CropPosition};
use crate::beatset::{segment_beats, BeatSegment};
use crate::denoise::denoise;
use crate::exec::Execution;
use crate::spectro::{spectrogram, SpectrogramConfig, SpectrogramImage};
use crate::wfdb::{read_annotations, read_record, BeatClass};
use crate::Result;

/// Set on the id of every augmented sample.
pub const AUGMENTED_ID_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Native,
    Augmented { source_id: u64, position: CropPosition },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub label: BeatClass,
    pub image: SpectrogramImage,
    pub origin: Origin,
    pub record: String,
    pub center_index: usize,
}

impl Sample {
    pub fn is_augmented(&self) -> bool {
        matches!(self.origin, Origin::Augmented { .. })
    }
}

/// Id of the crop of `source_id` taken at `position`.
pub fn augmented_id(source_id: u64, position: CropPosition) -> u64 {
    AUGMENTED_ID_BIT | (source_id << 4) | position as u64
}

/// Reads, denoises and segments one record using its `atr` annotations.
pub fn record_beats(dir: &Path, name: &str, cfg: &RunConfig) -> Result<Vec<BeatSegment>> {
    let record = read_record(dir, name)?;
    if cfg.channel >= record.signals.len() {
        return Err(PipelineError::Config(format!("channel {} out of range for record {name}", cfg.channel)).into());
    }
    let clean = denoise(&record.physical(cfg.channel), &cfg.denoise)?;
    let annotations = read_annotations(dir, name, "atr")?;
    Ok(segment_beats(&clean, &annotations, cfg.window, name)?)
}

/// Keeps at most `max` beats per class, chosen with a seeded shuffle; the
/// survivors stay in their original order.
pub fn limit_per_class(beats: Vec<BeatSegment>, max: usize, seed: u64) -> Vec<BeatSegment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; beats.len()];
    for class in BeatClass::ALL {
        let mut idx: Vec<usize> = (0..beats.len()).filter(|&i| beats[i].label == class).collect();
        idx.shuffle(&mut rng);
        idx.iter().take(max).for_each(|&i| keep[i] = true);
    }
    beats
        .into_iter()
        .zip(keep)
        .filter_map(|(b, k)| k.then_some(b))
        .collect()
}

/// One native sample per beat; ids are positions in `beats`.
pub fn samples_from_beats(beats: &[BeatSegment], cfg: &SpectrogramConfig, exec: Execution) -> Result<Vec<Sample>> {
    let images = exec.try_map(beats, |b| spectrogram(&b.samples, cfg))?;
    Ok(beats
        .iter()
        .zip(images)
        .enumerate()
        .map(|(i, (b, image))| Sample {
            id: i as u64,
            label: b.label,
            image,
            origin: Origin::Native,
            record: b.record_name.clone(),
            center_index: b.center_index,
        })
        .collect())
}

/// Beats of all configured records, capped per class, turned into samples.
pub fn load_dataset(dir: &Path, cfg: &RunConfig, exec: Execution) -> Result<Vec<Sample>> {
    if cfg.records.is_empty() {
        return Err(PipelineError::Config("no records selected".into()).into());
    }
    let mut beats = Vec::new();
    for name in &cfg.records {
        beats.extend(record_beats(dir, name, cfg)?);
    }
    if let Some(max) = cfg.max_per_class {
        beats = limit_per_class(beats, max, cfg.split.seed);
    }
    if cfg.min_class_size > 0 {
        let mut counts = [0usize; BeatClass::COUNT];
        beats.iter().for_each(|b| counts[b.label.index()] += 1);
        beats.retain(|b| counts[b.label.index()] >= cfg.min_class_size);
    }
    samples_from_beats(&beats, &cfg.spectrogram, exec)
}

/// Crop variants of every native sample whose class is selected by `cfg`.
pub fn augment_samples(samples: &[&Sample], cfg: &AugmentConfig, exec: Execution) -> Result<Vec<Sample>> {
    let chosen: Vec<&Sample> = samples
        .iter()
        .copied()
        .filter(|s| !s.is_augmented() && cfg.applies_to(s.label))
        .collect();
    let variants = exec.try_map(&chosen, |s| -> Result<Vec<Sample>> {
        let (_, plan) = crop_plan(s.image.height, cfg.crop_ratio, cfg.include_center)?;
        let images = crop_augment(&s.image, cfg.crop_ratio, cfg.include_center)?;
        Ok(plan
            .into_iter()
            .zip(images)
            .map(|((position, _), image)| Sample {
                id: augmented_id(s.id, position),
                label: s.label,
                image,
                origin: Origin::Augmented {
                    source_id: s.id,
                    position,
                },
                record: s.record.clone(),
                center_index: s.center_index,
            })
            .collect())
    })?;
    Ok(variants.into_iter().flatten().collect())
}

pub fn class_counts(samples: &[Sample]) -> BTreeMap<BeatClass, usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(s.label).or_insert(0) += 1;
    }
    m
}

/// SHA-256 over ids, labels, image sizes and pixel bits, in sample order.
pub fn dataset_hash(samples: &[Sample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.id.to_le_bytes());
        h.update([s.label.index() as u8]);
        h.update((s.image.height as u32).to_le_bytes());
        h.update((s.image.width as u32).to_le_bytes());
        for p in &s.image.pixels {
            h.update(p.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}
