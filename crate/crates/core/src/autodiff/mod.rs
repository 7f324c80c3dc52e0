//! Eager, tape-based reverse-mode differentiation over dense `f64` tensors.
//!
//! Every operation appends a node to a [`Tape`] and returns a [`Var`]
//! handle. Nodes are stored in creation order, which is a topological order,
//! so [`Tape::backward`] is a single reverse sweep. Running `backward` a
//! second time without [`Tape::zero_grad`] is an error rather than silent
//! accumulation.
//!
//! Matrix-shaped operations work on rank-2 tensors; elementwise operations
//! accept any shape.

use alloc::string::String;
use alloc::vec::Vec;

mod check;
mod optim;
mod tape;
mod tensor;

pub use check::{check_gradients, GradCheck, GradCheckReport, Selection};
pub use optim::{Adam, AdamConfig, ParamStore, ParamVars};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: expected a rank-2 tensor, got shape {shape:?}")]
    Rank { op: &'static str, shape: Vec<usize> },
    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    Axis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },
    #[error("{op}: range {start}..{end} out of bounds for extent {extent}")]
    Range {
        op: &'static str,
        start: usize,
        end: usize,
        extent: usize,
    },
    #[error("{op}: index {index} out of range for {extent} rows")]
    Index {
        op: &'static str,
        index: usize,
        extent: usize,
    },
    #[error("tensor data length {got} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, got: usize },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("backward already ran on this tape; call zero_grad before running it again")]
    AlreadyBackpropagated,
    #[error("{op}: zero vector in row {row}")]
    ZeroVector { op: &'static str, row: usize },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{name}`: gradient length {got} does not match {expected}")]
    GradientLength {
        name: String,
        expected: usize,
        got: usize,
    },
}
