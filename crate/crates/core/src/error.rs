use thiserror::Error;

use crate::augment::AugmentError;
use crate::beatset::BeatsetError;
use crate::denoise::DenoiseError;
use crate::nn::NnError;
use crate::pipeline::PipelineError;
use crate::spectro::SpectroError;
use crate::wfdb::WfdbError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error; each variant carries the error of the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Wfdb(#[from] WfdbError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Beatset(#[from] BeatsetError),
    #[error(transparent)]
    Spectro(#[from] SpectroError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl Error {
    /// Stable `Module::Variant` identifier, e.g. `wfdb::ChecksumMismatch`.
    pub fn name(&self) -> String {
        let (module, variant) = match self {
            Error::Wfdb(e) => ("wfdb", e.variant_name()),
            Error::Denoise(e) => ("denoise", e.variant_name()),
            Error::Beatset(e) => ("beatset", e.variant_name()),
            Error::Spectro(e) => ("spectro", e.variant_name()),
            Error::Augment(e) => ("augment", e.variant_name()),
            Error::Nn(e) => ("nn", e.variant_name()),
            Error::Pipeline(e) => ("pipeline", e.variant_name()),
        };
        format!("{module}::{variant}")
    }
}
