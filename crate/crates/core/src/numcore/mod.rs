//! Dense tensors, a reverse-mode compute tape, Adam, seeded initialization
//! and a finite-difference gradient harness.

mod adam;
mod fdcheck;
mod init;
mod kernels;
pub mod rng;
mod scalar;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fdcheck::finite_diff_check;
pub use init::{seeded_init, InitScheme};
pub use scalar::{DType, Scalar};
pub use tape::{Gradients, Op, OpKind, Tape, Var, LAYER_NORM_EPS};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: index {index} out of range (bound {bound})")]
    Index { op: &'static str, index: usize, bound: usize },
    #[error("{op}: non-finite value")]
    NonFinite { op: &'static str },
    #[error("{op}: row {row} has zero norm")]
    ZeroRow { op: &'static str, row: usize },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("tape already consumed by backward; record a new forward pass")]
    TapeConsumed,
    #[error("{0}")]
    Invalid(String),
}
