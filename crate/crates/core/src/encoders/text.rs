use crate::numcore::{NumError, Scalar, Tape, Tensor, Var};

use super::Tokens;

/// One pre-norm transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBlock<P> {
    pub norm1_gain: P,
    pub norm1_bias: P,
    pub w_q: P,
    pub w_k: P,
    pub w_v: P,
    pub w_o: P,
    pub norm2_gain: P,
    pub norm2_bias: P,
    /// `d_m × 4d_m`
    pub w_1: P,
    pub b_1: P,
    /// `4d_m × d_m`
    pub w_2: P,
    pub b_2: P,
}

/// Text tower parameters. `P` is a tensor, a tape variable, or a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEncoderParams<P> {
    pub token_embedding: P,
    pub positional_embedding: P,
    pub blocks: Vec<TextBlock<P>>,
    pub final_gain: P,
    pub final_bias: P,
    pub heads: usize,
}

impl<P> TextEncoderParams<P> {
    /// Apply `f` to every tensor slot with its stable name, in a fixed order.
    pub fn map<'a, Q>(&'a self, prefix: &str, f: &mut impl FnMut(&str, &'a P) -> Q) -> TextEncoderParams<Q> {
        TextEncoderParams {
            token_embedding: f(&format!("{prefix}token_embedding"), &self.token_embedding),
            positional_embedding: f(&format!("{prefix}positional_embedding"), &self.positional_embedding),
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let p = format!("{prefix}block{i}.");
                    TextBlock {
                        norm1_gain: f(&format!("{p}norm1_gain"), &b.norm1_gain),
                        norm1_bias: f(&format!("{p}norm1_bias"), &b.norm1_bias),
                        w_q: f(&format!("{p}w_q"), &b.w_q),
                        w_k: f(&format!("{p}w_k"), &b.w_k),
                        w_v: f(&format!("{p}w_v"), &b.w_v),
                        w_o: f(&format!("{p}w_o"), &b.w_o),
                        norm2_gain: f(&format!("{p}norm2_gain"), &b.norm2_gain),
                        norm2_bias: f(&format!("{p}norm2_bias"), &b.norm2_bias),
                        w_1: f(&format!("{p}w_1"), &b.w_1),
                        b_1: f(&format!("{p}b_1"), &b.b_1),
                        w_2: f(&format!("{p}w_2"), &b.w_2),
                        b_2: f(&format!("{p}b_2"), &b.b_2),
                    }
                })
                .collect(),
            final_gain: f(&format!("{prefix}final_gain"), &self.final_gain),
            final_bias: f(&format!("{prefix}final_bias"), &self.final_bias),
            heads: self.heads,
        }
    }

    /// Mutable visit in the same order as [`TextEncoderParams::map`].
    pub fn for_each_mut<'a>(&'a mut self, f: &mut impl FnMut(&'a mut P)) {
        f(&mut self.token_embedding);
        f(&mut self.positional_embedding);
        for b in &mut self.blocks {
            for p in [
                &mut b.norm1_gain,
                &mut b.norm1_bias,
                &mut b.w_q,
                &mut b.w_k,
                &mut b.w_v,
                &mut b.w_o,
                &mut b.norm2_gain,
                &mut b.norm2_bias,
                &mut b.w_1,
                &mut b.b_1,
                &mut b.w_2,
                &mut b.b_2,
            ] {
                f(p);
            }
        }
        f(&mut self.final_gain);
        f(&mut self.final_bias);
    }
}

impl TextEncoderParams<Vec<usize>> {
    pub fn shapes(vocab_size: usize, max_len: usize, d_m: usize, layers: usize, heads: usize) -> Self {
        TextEncoderParams {
            token_embedding: vec![vocab_size, d_m],
            positional_embedding: vec![max_len, d_m],
            blocks: (0..layers)
                .map(|_| TextBlock {
                    norm1_gain: vec![d_m],
                    norm1_bias: vec![d_m],
                    w_q: vec![d_m, d_m],
                    w_k: vec![d_m, d_m],
                    w_v: vec![d_m, d_m],
                    w_o: vec![d_m, d_m],
                    norm2_gain: vec![d_m],
                    norm2_bias: vec![d_m],
                    w_1: vec![d_m, 4 * d_m],
                    b_1: vec![4 * d_m],
                    w_2: vec![4 * d_m, d_m],
                    b_2: vec![d_m],
                })
                .collect(),
            final_gain: vec![d_m],
            final_bias: vec![d_m],
            heads,
        }
    }
}

impl<T: Scalar> TextEncoderParams<Tensor<T>> {
    pub fn dim(&self) -> usize {
        self.token_embedding.shape()[1]
    }

    pub fn max_len(&self) -> usize {
        self.positional_embedding.shape()[0]
    }
}

/// Additive causal mask: 0 on and below the diagonal, a large negative above.
fn causal_mask<T: Scalar>(n: usize) -> Tensor<T> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            m[i * n + j] = -1e9;
        }
    }
    Tensor::from_f64(&[n, n], &m).unwrap()
}

/// `x · σ(1.702 x)`
pub(crate) fn quick_gelu<T: Scalar>(tape: &mut Tape<T>, x: Var) -> Result<Var, NumError> {
    let s = tape.scale(x, T::from_f64(1.702))?;
    let s = tape.sigmoid(s)?;
    tape.mul(x, s)
}

/// Encode a batch of tokenized texts; returns `B × d_m` (final-norm state at each eos).
///
/// Only positions `0..=eos` are computed. Under the causal mask the eos state
/// never depends on later positions, so this is exact.
pub fn text_forward<T: Scalar>(tape: &mut Tape<T>, p: &TextEncoderParams<Var>, texts: &[&Tokens]) -> Result<Var, NumError> {
    if texts.is_empty() {
        return Err(NumError::Invalid("text_forward: no texts".into()));
    }
    let d_m = tape.shape(p.token_embedding)[1];
    let max_len = tape.shape(p.positional_embedding)[0];
    let h = p.heads;
    if h == 0 || !d_m.is_multiple_of(h) {
        return Err(NumError::Invalid(format!("d_m = {d_m} not divisible by {h} heads")));
    }
    let dh = d_m / h;
    let mut ids = Vec::new();
    let mut positions = Vec::new();
    let mut spans = Vec::with_capacity(texts.len());
    for t in texts {
        if t.eos >= t.ids.len() || t.eos >= max_len {
            return Err(NumError::Index { op: "text_forward", index: t.eos, bound: t.ids.len().min(max_len) });
        }
        spans.push((ids.len(), t.eos + 1));
        ids.extend_from_slice(&t.ids[..=t.eos]);
        positions.extend(0..=t.eos);
    }
    let tok = tape.embedding_lookup(p.token_embedding, ids)?;
    let pos = tape.embedding_lookup(p.positional_embedding, positions)?;
    let mut x = tape.add(tok, pos)?;
    let inv_sqrt = T::from_f64(1.0 / (dh as f64).sqrt());
    for b in &p.blocks {
        let a = tape.layer_norm_rows(x, b.norm1_gain, b.norm1_bias)?;
        let q = tape.matmul(a, b.w_q)?;
        let k = tape.matmul(a, b.w_k)?;
        let v = tape.matmul(a, b.w_v)?;
        let mut seq_out = Vec::with_capacity(spans.len());
        for &(start, n) in &spans {
            let rows: Vec<usize> = (start..start + n).collect();
            let (qs, ks, vs) = (
                tape.gather_rows(q, rows.clone())?,
                tape.gather_rows(k, rows.clone())?,
                tape.gather_rows(v, rows)?,
            );
            let mask = tape.constant(causal_mask(n));
            let mut heads = Vec::with_capacity(h);
            for head in 0..h {
                let qh = tape.narrow_cols(qs, head * dh, dh)?;
                let kh = tape.narrow_cols(ks, head * dh, dh)?;
                let vh = tape.narrow_cols(vs, head * dh, dh)?;
                let kt = tape.transpose(kh)?;
                let scores = tape.matmul(qh, kt)?;
                let scores = tape.scale(scores, inv_sqrt)?;
                let scores = tape.masked_fill(scores, mask)?;
                let attn = tape.row_softmax(scores)?;
                heads.push(tape.matmul(attn, vh)?);
            }
            seq_out.push(if h == 1 { heads[0] } else { tape.concat(&heads, 1)? });
        }
        let attn = if seq_out.len() == 1 { seq_out[0] } else { tape.concat(&seq_out, 0)? };
        let o = tape.matmul(attn, b.w_o)?;
        x = tape.add(x, o)?;

        let m = tape.layer_norm_rows(x, b.norm2_gain, b.norm2_bias)?;
        let m = tape.matmul(m, b.w_1)?;
        let m = tape.add(m, b.b_1)?;
        let m = quick_gelu(tape, m)?;
        let m = tape.matmul(m, b.w_2)?;
        let m = tape.add(m, b.b_2)?;
        x = tape.add(x, m)?;
    }
    let eos_rows: Vec<usize> = spans.iter().map(|&(s, n)| s + n - 1).collect();
    let last = tape.gather_rows(x, eos_rows)?;
    tape.layer_norm_rows(last, p.final_gain, p.final_bias)
}

/// Text feature vector (`d_m`) for one tokenized text.
pub fn text_encode<T: Scalar>(tokens: &Tokens, params: &TextEncoderParams<Tensor<T>>) -> Result<Vec<T>, NumError> {
    let mut tape = Tape::new();
    let p = params.map("", &mut |_, t| tape.constant(t.clone()));
    let out = text_forward(&mut tape, &p, &[tokens])?;
    Ok(tape.value(out).data().to_vec())
}
