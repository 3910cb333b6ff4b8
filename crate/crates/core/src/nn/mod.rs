//! Dense-tensor CNN engine: layers, loss, optimizers, model and checkpoints.

pub mod checkpoint;
pub(crate) mod gemm;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod tensor;

use std::path::PathBuf;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use loss::LossKind;
pub use model::{image_tensor, BatchForward, CnnModel, CnnSpec, HeadMode, LayerTrace, Learner};
pub use optim::{AdamState, Optimizer};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("max-pooling needs even dimensions, got {height}x{width}")]
    OddDimensions { height: usize, width: usize },
    #[error("backward called without a pending forward pass")]
    NotForwarded,
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
}

impl NnError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            NnError::ShapeMismatch(_) => "ShapeMismatch",
            NnError::OddDimensions { .. } => "OddDimensions",
            NnError::NotForwarded => "NotForwarded",
            NnError::NonFinite(_) => "NonFinite",
            NnError::Config(_) => "Config",
            NnError::Io { .. } => "Io",
            NnError::MalformedCheckpoint(_) => "MalformedCheckpoint",
        }
    }
}
