//! Radar gait recognition from micro-Doppler signatures.
//!
//! The crate covers the whole pipeline:
//!
//! - [`radar_synth`]: synthetic walkers, baseband synthesis, decimation and
//!   the `MDRS` raw-signal format;
//! - [`tfr`]: STFT spectrograms, clutter/edge trimming, frame cropping,
//!   cadence velocity diagrams and model-input images;
//! - [`dataset`]: on-disk layout, sequence-level split, frame cache;
//! - [`autodiff`]: tensors with reverse-mode differentiation and checkpoints;
//! - [`vit`], [`fusion`], [`model`]: the two Vision-Transformer streams,
//!   attention-based feature fusion and the classifier;
//! - [`train`]: SGD with momentum, warmup/decay schedule, evaluation;
//! - [`cli`]: the `mdgait` command-line front end.

pub mod autodiff;
mod binio;
pub mod cli;
pub mod dataset;
pub mod fusion;
pub mod model;
pub mod radar_synth;
pub mod render;
pub mod seed;
pub mod tfr;
pub mod train;
pub mod vit;

use thiserror::Error;

pub use binio::FormatError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Synth(#[from] radar_synth::SynthError),
    #[error(transparent)]
    Tfr(#[from] tfr::TfrError),
    #[error(transparent)]
    Autodiff(#[from] autodiff::AutodiffError),
    #[error(transparent)]
    Checkpoint(#[from] autodiff::CheckpointError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}
