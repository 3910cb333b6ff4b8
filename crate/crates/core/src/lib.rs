//! ECG arrhythmia classification from short-time Fourier spectrograms.
//!
//! The crate covers the whole path from raw MIT-BIH files to a trained
//! classifier:
//!
//! * [`wfdb`] reads `.hea` headers, format-212 signal files and MIT annotation
//!   files, and maps beat annotations onto the eight [`BeatClass`]es.
//! * [`denoise`] removes noise and baseline drift with a Daubechies wavelet
//!   cascade and a smooth shrinkage rule.
//! * [`beatset`] cuts fixed-length windows around each labelled beat.
//! * [`spectro`] turns a window into a normalized log-magnitude image.
//! * [`augment`] produces the eight cropped-and-resized variants of an image.
//! * [`nn`] is a small dense-tensor CNN engine with exact backpropagation and
//!   Adam.
//! * [`pipeline`] assembles datasets, splits them, trains and scores models.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod augment;
pub mod beatset;
pub mod denoise;
pub mod error;
pub mod exec;
pub mod nn;
pub mod pipeline;
pub mod spectro;
pub mod wfdb;

pub use error::{Error, Result};
pub use exec::Execution;
pub use wfdb::BeatClass;
