//! Dataset assembly, splitting, training and scoring.

pub mod config;
pub mod dataset;
pub mod manifest;
pub mod metrics;
pub mod split;
pub mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::wfdb::BeatClass;

pub use config::{OptimizerKind, RunConfig, TrainConfig};
pub use dataset::{Origin, Sample};
pub use manifest::Manifest;
pub use metrics::{metrics_from_confusion, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use split::{kfold, split_dataset, SplitSpec};
pub use train::{evaluate, run_experiment, sweep_grid, train, ExperimentResult, TrainHistory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("class {class} has {count} samples, at least {needed} needed")]
    ClassTooSmall {
        class: BeatClass,
        count: usize,
        needed: usize,
    },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            PipelineError::EmptyDataset => "EmptyDataset",
            PipelineError::ClassTooSmall { .. } => "ClassTooSmall",
            PipelineError::EmptyMatrix => "EmptyMatrix",
            PipelineError::Config(_) => "Config",
            PipelineError::Format(_) => "Format",
            PipelineError::Io { .. } => "Io",
        }
    }
}
