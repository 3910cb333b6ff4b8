//! Run configuration and its `key = value` text form.
//!
//! Values are layered: built-in defaults, then a config file, then explicit
//! overrides (the CLI). [`RunConfig::to_pairs`] lists every key, so the
//! effective configuration can be echoed into a manifest and read back.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::split::SplitSpec;
use super::PipelineError;
use crate::augment::AugmentConfig;
use crate::beatset::DEFAULT_WINDOW;
use crate::denoise::DenoiseConfig;
use crate::nn::{HeadMode, LossKind};
use crate::spectro::SpectrogramConfig;
use crate::wfdb::BeatClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(format!("unknown optimizer `{s}`")),
        }
    }
}

/// Training-loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub head: HeadMode,
    pub augment: bool,
    pub augment_config: AugmentConfig,
    /// Stop as soon as every fit sample is classified correctly.
    pub stop_at_full_train_accuracy: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 30,
            loss: LossKind::BinaryPerClass,
            optimizer: OptimizerKind::Adam,
            head: HeadMode::Dense,
            augment: true,
            augment_config: AugmentConfig::default(),
            stop_at_full_train_accuracy: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(PipelineError::Config(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(PipelineError::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Everything an experiment needs, from record names to the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub records: Vec<String>,
    pub channel: usize,
    pub max_per_class: Option<usize>,
    /// Classes with fewer beats than this are dropped before splitting.
    pub min_class_size: usize,
    pub window: usize,
    pub denoise: DenoiseConfig,
    pub spectrogram: SpectrogramConfig,
    pub split: SplitSpec,
    /// How many of the k folds are actually trained; `None` trains all.
    pub folds_to_train: Option<usize>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            records: Vec::new(),
            channel: 0,
            max_per_class: None,
            min_class_size: 0,
            window: DEFAULT_WINDOW,
            denoise: DenoiseConfig::default(),
            spectrogram: SpectrogramConfig::default(),
            split: SplitSpec::default(),
            folds_to_train: None,
            train: TrainConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| PipelineError::Config(format!("{key} = {value}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, PipelineError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(PipelineError::Config(format!(
            "{key} = {value}: expected true or false"
        ))),
    }
}

fn parse_opt(key: &str, value: &str) -> Result<Option<usize>, PipelineError> {
    match value {
        "" | "none" | "all" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn opt_str(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl RunConfig {
    /// Every recognised key, in manifest order.
    pub const KEYS: [&'static str; 28] = [
        "seed",
        "records",
        "channel",
        "max_per_class",
        "min_class_size",
        "window",
        "wavelet",
        "levels",
        "alpha",
        "remove_baseline",
        "stft_window_length",
        "stft_hop",
        "stft_window",
        "image_size",
        "train_fraction",
        "k_folds",
        "folds_to_train",
        "learning_rate",
        "batch_size",
        "epochs",
        "loss",
        "optimizer",
        "head",
        "augment",
        "crop_ratio",
        "include_center",
        "augment_classes",
        "stop_at_full_train_accuracy",
    ];

    /// Sets one key; the seed drives both the split and the model.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let value = value.trim();
        match key {
            "seed" => {
                let s = parse(key, value)?;
                self.split.seed = s;
                self.train.seed = s;
            }
            "records" => self.records = list(value),
            "channel" => self.channel = parse(key, value)?,
            "max_per_class" => self.max_per_class = parse_opt(key, value)?,
            "min_class_size" => self.min_class_size = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "wavelet" => self.denoise.wavelet = parse(key, value)?,
            "levels" => self.denoise.levels = parse(key, value)?,
            "alpha" => self.denoise.alpha = parse(key, value)?,
            "remove_baseline" => self.denoise.remove_baseline = parse_bool(key, value)?,
            "stft_window_length" => self.spectrogram.stft.window_length = parse(key, value)?,
            "stft_hop" => self.spectrogram.stft.hop = parse(key, value)?,
            "stft_window" => self.spectrogram.stft.window = parse(key, value)?,
            "image_size" => self.spectrogram.image_side = parse(key, value)?,
            "train_fraction" => self.split.train_fraction = parse(key, value)?,
            "k_folds" => self.split.k_folds = parse(key, value)?,
            "folds_to_train" => self.folds_to_train = parse_opt(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "loss" => self.train.loss = parse(key, value)?,
            "optimizer" => self.train.optimizer = parse(key, value)?,
            "head" => self.train.head = parse(key, value)?,
            "augment" => self.train.augment = parse_bool(key, value)?,
            "crop_ratio" => self.train.augment_config.crop_ratio = parse(key, value)?,
            "include_center" => self.train.augment_config.include_center = parse_bool(key, value)?,
            "augment_classes" => {
                self.train.augment_config.classes = list(value)
                    .iter()
                    .map(|c| parse::<BeatClass>(key, c))
                    .collect::<Result<_, _>>()?
            }
            "stop_at_full_train_accuracy" => self.train.stop_at_full_train_accuracy = parse_bool(key, value)?,
            _ => return Err(PipelineError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Effective configuration as `(key, value)` pairs in [`RunConfig::KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let values = [
            self.split.seed.to_string(),
            self.records.join(","),
            self.channel.to_string(),
            opt_str(self.max_per_class),
            self.min_class_size.to_string(),
            self.window.to_string(),
            self.denoise.wavelet.to_string(),
            self.denoise.levels.to_string(),
            self.denoise.alpha.to_string(),
            self.denoise.remove_baseline.to_string(),
            self.spectrogram.stft.window_length.to_string(),
            self.spectrogram.stft.hop.to_string(),
            self.spectrogram.stft.window.to_string(),
            self.spectrogram.image_side.to_string(),
            self.split.train_fraction.to_string(),
            self.split.k_folds.to_string(),
            opt_str(self.folds_to_train),
            t.learning_rate.to_string(),
            t.batch_size.to_string(),
            t.epochs.to_string(),
            t.loss.to_string(),
            t.optimizer.to_string(),
            t.head.to_string(),
            t.augment.to_string(),
            t.augment_config.crop_ratio.to_string(),
            t.augment_config.include_center.to_string(),
            t.augment_config
                .classes
                .iter()
                .map(|c| c.acronym())
                .collect::<Vec<_>>()
                .join(","),
            t.stop_at_full_train_accuracy.to_string(),
        ];
        Self::KEYS.iter().zip(values).map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Applies `key = value` lines; blank lines, `#` comments and `run.`
    /// metadata keys are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !k.starts_with("run.") {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Defaults, then `file`, then `overrides` in order.
    pub fn layered(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
