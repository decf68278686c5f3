//! Dense tensors with reverse-mode differentiation.
//!
//! A [`Graph`] records every operation applied to its nodes; calling
//! [`Graph::backward`] on a scalar node walks the record in reverse and
//! returns the gradients of all trainable leaves. Graphs are built fresh for
//! every forward pass. Training uses `f32`; gradient checks use `f64`.

mod checkpoint;
mod gradcheck;
mod graph;
mod params;
mod scalar;
mod tensor;

use thiserror::Error;

pub use checkpoint::{CheckpointError, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, GradCheckReport, REL_ERROR_FLOOR};
pub use graph::{Activation, Gelu, Gradients, Graph, Var};
pub use params::{BoundParams, ParamId, ParamStore};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub mod checkpoint_io {
    pub use super::checkpoint::{apply, decode, encode, load_into, save};
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Shape { op: &'static str, lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("{op}: expected a rank-{expected} tensor, got shape {shape:?}")]
    Rank { op: &'static str, expected: usize, shape: Vec<usize> },
    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    Axis { op: &'static str, axis: usize, shape: Vec<usize> },
    #[error("{op}: range {start}..{} out of bounds for shape {shape:?}", start + len)]
    Range { op: &'static str, start: usize, len: usize, shape: Vec<usize> },
    #[error("{op}: needs at least {needed} inputs, got {got}")]
    Arity { op: &'static str, needed: usize, got: usize },
    #[error("{op}: no inputs")]
    Empty { op: &'static str },
    #[error("invalid shape {shape:?}")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} needs {} elements, got {len}", shape.iter().product::<usize>())]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
}
