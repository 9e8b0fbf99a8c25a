use serde::{Deserialize, Serialize};

use crate::encoders::{init_named, CgcnnParams, TextEncoderParams};
use crate::numcore::rng::hash64;
use crate::numcore::{seeded_init, InitScheme, NumError, Scalar, Tensor};

/// Initial `log_scale`, so the logit scale starts at `1/0.07`.
pub fn log_scale_init() -> f64 {
    (1.0f64 / 0.07).ln()
}

/// Upper clamp on the logit scale `exp(log_scale)`.
pub const MAX_LOGIT_SCALE: f64 = 100.0;

/// Every size needed to lay out [`ClampParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub d_v: usize,
    pub conv_layers: usize,
    pub edge_width: usize,
    pub d_m: usize,
    pub text_layers: usize,
    pub heads: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    /// Shared embedding dimension.
    pub d: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<(), NumError> {
        let bad = |m: String| Err(NumError::Invalid(m));
        if self.d_v == 0 || self.d_m == 0 || self.conv_layers == 0 || self.edge_width == 0 {
            return bad(format!("zero model dimension in {self:?}"));
        }
        if self.d < 2 {
            return bad(format!("embedding dim must be >= 2, got {}", self.d));
        }
        if self.heads == 0 || !self.d_m.is_multiple_of(self.heads) {
            return bad(format!("d_m = {} not divisible by {} heads", self.d_m, self.heads));
        }
        if self.max_len < 2 || self.vocab_size < 5 {
            return bad(format!("max_len >= 2 and vocab_size >= 5 required, got {self:?}"));
        }
        Ok(())
    }
}

/// All learnable parameters. `P` is a tensor, a tape variable, or a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampParams<P> {
    pub cgcnn: CgcnnParams<P>,
    pub text: TextEncoderParams<P>,
    /// `d_v × d`
    pub w_c: P,
    /// `d_m × d`
    pub w_t: P,
    /// Scalar (shape `[]`).
    pub log_scale: P,
}

impl<P> ClampParams<P> {
    /// Apply `f` to every tensor slot with its stable name, in a fixed order.
    pub fn map<'a, Q>(&'a self, f: &mut impl FnMut(&str, &'a P) -> Q) -> ClampParams<Q> {
        ClampParams {
            cgcnn: self.cgcnn.map("cgcnn.", f),
            text: self.text.map("text.", f),
            w_c: f("w_c", &self.w_c),
            w_t: f("w_t", &self.w_t),
            log_scale: f("log_scale", &self.log_scale),
        }
    }

    /// Mutable visit in the same order as [`ClampParams::map`].
    pub fn for_each_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut P)) {
        self.cgcnn.for_each_mut(f);
        self.text.for_each_mut(f);
        f(&mut self.w_c);
        f(&mut self.w_t);
        f(&mut self.log_scale);
    }

    /// Slots in order, with names.
    pub fn named(&self) -> Vec<(String, &P)> {
        let mut out = Vec::new();
        self.map(&mut |n, p| out.push((n.to_string(), p)));
        out
    }
}

impl ClampParams<Vec<usize>> {
    pub fn shapes(dims: &ModelDims) -> Self {
        ClampParams {
            cgcnn: CgcnnParams::shapes(dims.d_v, dims.conv_layers, dims.edge_width),
            text: TextEncoderParams::shapes(dims.vocab_size, dims.max_len, dims.d_m, dims.text_layers, dims.heads),
            w_c: vec![dims.d_v, dims.d],
            w_t: vec![dims.d_m, dims.d],
            log_scale: vec![],
        }
    }
}

impl<T: Scalar> ClampParams<Tensor<T>> {
    /// Seeded initialization; every tensor draws from a stream keyed by its name.
    pub fn init(dims: &ModelDims, seed: u64) -> Result<Self, NumError> {
        dims.validate()?;
        let shapes = ClampParams::shapes(dims);
        let mut err = None;
        let p = shapes.map(&mut |name, shape| {
            let t = if name == "log_scale" {
                seeded_init(shape, InitScheme::Constant(log_scale_init()), hash64(seed, name))
            } else {
                init_named(name, shape, seed)
            };
            t.unwrap_or_else(|e| {
                err.get_or_insert(e);
                Tensor::zeros(shape)
            })
        });
        match err {
            Some(e) => Err(e),
            None => Ok(p),
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            d_v: self.cgcnn.dim(),
            conv_layers: self.cgcnn.layers.len(),
            edge_width: self.cgcnn.edge_width(),
            d_m: self.text.dim(),
            text_layers: self.text.blocks.len(),
            heads: self.text.heads,
            max_len: self.text.max_len(),
            vocab_size: self.text.token_embedding.shape()[0],
            d: self.w_c.shape()[1],
        }
    }

    /// Tensors in slot order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        self.map(&mut |_, t| out.push(t));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        self.for_each_mut(&mut |t| out.push(t));
        out
    }

    /// Effective logit scale `min(exp(log_scale), 100)`.
    pub fn logit_scale(&self) -> f64 {
        self.log_scale.item().as_f64().exp().min(MAX_LOGIT_SCALE)
    }

    pub fn cast<U: Scalar>(&self) -> ClampParams<Tensor<U>> {
        self.map(&mut |_, t| t.cast())
    }
}
