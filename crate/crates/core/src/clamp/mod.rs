//! The shared embedding space: projections, the symmetric contrastive loss,
//! zero-shot ranking and retrieval metrics.

mod metrics;
mod model;
mod params;

pub use metrics::{pair_matching_accuracy, rank_labels, recall_at_k, zero_shot, EmbeddingMatrix, PairAccuracy, ZeroShotResult};
pub use model::{
    bind_constants, bind_leaves, clamp_loss, clamp_loss_var, contrastive_loss, crystal_embeddings, embed_crystal,
    embed_crystals, embed_text, embed_texts, logit_scale_var, logits_var, loss_and_grads, similarity_logits,
    text_embeddings,
};
pub use params::{log_scale_init, ClampParams, ModelDims, MAX_LOGIT_SCALE};

use crate::numcore::NumError;

#[derive(Debug, thiserror::Error)]
pub enum ClampError {
    #[error("no prompts given")]
    EmptyPrompts,
    #[error("{which} row {row} is not unit length (norm {norm})")]
    NotUnit { which: &'static str, row: usize, norm: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

impl ClampError {
    /// An embedding collapsed to the zero vector before normalization.
    pub fn is_collapse(&self) -> bool {
        matches!(self, ClampError::Num(NumError::ZeroRow { .. }))
    }
}
