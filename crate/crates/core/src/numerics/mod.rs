//! Dense 64-bit tensors, a reverse-mode differentiation graph, the Adam
//! optimizer, and a finite-difference gradient checker.

mod adam;
mod attention;
mod gradcheck;
mod graph;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use attention::{AttentionOutput, AttentionVars};
pub use gradcheck::{check_gradients, check_gradients_at, GradCheckOptions, GradCheckReport, InputReport};
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: input length {got} is shorter than the required minimum {required}")]
    InputTooShort {
        op: &'static str,
        got: usize,
        required: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("backward requires a scalar output, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("parameter {index} has no gradient")]
    MissingGradient { index: usize },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },
}

pub(crate) fn shape_err(op: &'static str, detail: String) -> NumericsError {
    NumericsError::Shape { op, detail }
}
