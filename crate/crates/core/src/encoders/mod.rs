//! The two towers: a gated crystal graph convolution network and a
//! word-level causal transformer.

mod cgcnn;
mod text;
mod vocab;

pub use cgcnn::{cgcnn_encode, cgcnn_forward, CgcnnParams, ConvLayer, ConvNorm};
pub use text::{text_encode, text_forward, TextBlock, TextEncoderParams};
pub use vocab::{build_vocab, tokenize, words, Tokens, Vocab, BOS, EOS, PAD, RESERVED, UNK};

use crate::numcore::rng::hash64;
use crate::numcore::{seeded_init, InitScheme, NumError, Scalar, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("empty corpus: cannot build a vocabulary")]
    EmptyCorpus,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Init scheme implied by a parameter name: lookup tables uniform ±1, the
/// positional table N(0, 0.02), norm gains 1, biases 0, weight matrices
/// uniform ±1/√fan_in.
pub fn init_scheme_for(name: &str) -> InitScheme {
    let leaf = leaf(name);
    if is_lookup_table(leaf) {
        InitScheme::UniformFanIn
    } else if leaf.ends_with("embedding") {
        InitScheme::Normal002
    } else if leaf.ends_with("gain") {
        InitScheme::Constant(1.0)
    } else if leaf.ends_with("bias") || leaf.starts_with("b_") {
        InitScheme::Zeros
    } else {
        InitScheme::UniformFanIn
    }
}

fn leaf(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}

/// Element and token tables act as linear maps on one-hot inputs, so their fan-in is 1.
fn is_lookup_table(leaf: &str) -> bool {
    leaf == "element_embedding" || leaf == "token_embedding"
}

/// Initialize one named tensor; each name draws from its own stream of `seed`.
pub fn init_named<T: Scalar>(name: &str, shape: &[usize], seed: u64) -> Result<Tensor<T>, NumError> {
    let seed = hash64(seed, name);
    if is_lookup_table(leaf(name)) {
        let n = shape.iter().product();
        return seeded_init(&[1, n], InitScheme::UniformFanIn, seed)?.reshape(shape);
    }
    seeded_init(shape, init_scheme_for(name), seed)
}
