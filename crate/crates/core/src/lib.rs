//! Contrastive crystal–text embeddings at desk scale.
//!
//! Crystals are read from CIF files, turned into periodic neighbor graphs and
//! encoded by a gated graph convolution network; descriptions are encoded by a
//! small causal transformer. Both towers are trained into a shared unit-sphere
//! embedding space with a symmetric in-batch contrastive loss, and crystals
//! can then be labeled zero-shot by the most similar text prompt.

// `!(x > 0.0)` style checks are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod numcore;

pub use numcore::{DType, NumError, Scalar, Tape, Tensor, Var};
pub mod crystal;
pub mod elements;
pub mod cifparse;
pub mod encoders;
pub mod clamp;
pub mod corpus;
pub mod pipeline;
