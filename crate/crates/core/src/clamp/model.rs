use crate::crystal::CrystalGraph;
use crate::encoders::{cgcnn_forward, text_forward, Tokens, Vocab};
use crate::numcore::{NumError, Scalar, Tape, Tensor, Var};

use super::{ClampError, ClampParams, MAX_LOGIT_SCALE};

/// Bind parameters onto a tape as trainable leaves.
pub fn bind_leaves<T: Scalar>(tape: &mut Tape<T>, p: &ClampParams<Tensor<T>>) -> ClampParams<Var> {
    p.map(&mut |_, t| tape.leaf(t.clone()))
}

/// Bind parameters onto a tape as constants (inference only).
pub fn bind_constants<T: Scalar>(tape: &mut Tape<T>, p: &ClampParams<Tensor<T>>) -> ClampParams<Var> {
    p.map(&mut |_, t| tape.constant(t.clone()))
}

/// `l2_normalize(cgcnn(graphs) · W_c)`, shape `B × d`.
pub fn crystal_embeddings<T: Scalar>(tape: &mut Tape<T>, p: &ClampParams<Var>, graphs: &[&CrystalGraph]) -> Result<Var, NumError> {
    let h = cgcnn_forward(tape, &p.cgcnn, graphs)?;
    let z = tape.matmul(h, p.w_c)?;
    tape.l2_normalize_rows(z)
}

/// `l2_normalize(text(tokens) · W_t)`, shape `B × d`.
pub fn text_embeddings<T: Scalar>(tape: &mut Tape<T>, p: &ClampParams<Var>, texts: &[&Tokens]) -> Result<Var, NumError> {
    let h = text_forward(tape, &p.text, texts)?;
    let z = tape.matmul(h, p.w_t)?;
    tape.l2_normalize_rows(z)
}

/// `min(exp(log_scale), 100)`; past the clamp the scale is a constant.
pub fn logit_scale_var<T: Scalar>(tape: &mut Tape<T>, log_scale: Var) -> Result<Var, NumError> {
    let s = tape.value(log_scale).item().as_f64().exp();
    if s > MAX_LOGIT_SCALE {
        Ok(tape.constant(Tensor::scalar(T::from_f64(MAX_LOGIT_SCALE))))
    } else {
        tape.exp(log_scale)
    }
}

/// `s · C·Tᵀ` on the tape.
pub fn logits_var<T: Scalar>(tape: &mut Tape<T>, c: Var, t: Var, scale: Var) -> Result<Var, NumError> {
    let tt = tape.transpose(t)?;
    let sim = tape.matmul(c, tt)?;
    tape.mul(sim, scale)
}

/// Symmetric cross-entropy with diagonal targets, on the tape.
pub fn clamp_loss_var<T: Scalar>(tape: &mut Tape<T>, logits: Var) -> Result<Var, NumError> {
    let shape = tape.shape(logits).to_vec();
    if shape.len() != 2 || shape[0] != shape[1] || shape[0] == 0 {
        return Err(NumError::Shape { op: "clamp_loss", detail: format!("logits must be square B×B, got {shape:?}") });
    }
    let targets: Vec<usize> = (0..shape[0]).collect();
    let rows = tape.cross_entropy_rows(logits, targets.clone())?;
    let rows = tape.mean(rows, None)?;
    let lt = tape.transpose(logits)?;
    let cols = tape.cross_entropy_rows(lt, targets)?;
    let cols = tape.mean(cols, None)?;
    let total = tape.add(rows, cols)?;
    tape.scale(total, T::from_f64(0.5))
}

/// Full in-batch objective for aligned `graphs[i]` / `texts[i]` pairs.
pub fn contrastive_loss<T: Scalar>(
    tape: &mut Tape<T>,
    p: &ClampParams<Var>,
    graphs: &[&CrystalGraph],
    texts: &[&Tokens],
) -> Result<Var, NumError> {
    if graphs.len() != texts.len() {
        return Err(NumError::Shape { op: "contrastive_loss", detail: format!("{} graphs vs {} texts", graphs.len(), texts.len()) });
    }
    let c = crystal_embeddings(tape, p, graphs)?;
    let t = text_embeddings(tape, p, texts)?;
    let s = logit_scale_var(tape, p.log_scale)?;
    let logits = logits_var(tape, c, t, s)?;
    clamp_loss_var(tape, logits)
}

/// Loss value and the gradient for every parameter (zeros where unreachable).
pub fn loss_and_grads<T: Scalar>(
    params: &ClampParams<Tensor<T>>,
    graphs: &[&CrystalGraph],
    texts: &[&Tokens],
) -> Result<(f64, ClampParams<Tensor<T>>), NumError> {
    let mut tape = Tape::new();
    let p = bind_leaves(&mut tape, params);
    let loss = contrastive_loss(&mut tape, &p, graphs, texts)?;
    let value = tape.value(loss).item().as_f64();
    let mut g = tape.backward(loss)?;
    let grads = p.map(&mut |_, &v| {
        let shape = tape.shape(v).to_vec();
        g.take(v).unwrap_or_else(|| Tensor::zeros(&shape))
    });
    Ok((value, grads))
}

/// `s · C·Tᵀ` for unit rows.
pub fn similarity_logits(c: &Tensor<f64>, t: &Tensor<f64>, s: f64) -> Result<Tensor<f64>, ClampError> {
    let (n, d) = c.dims2()?;
    let (m, d2) = t.dims2()?;
    if n != m || d != d2 {
        return Err(NumError::Shape { op: "similarity_logits", detail: format!("{:?} vs {:?}", c.shape(), t.shape()) }.into());
    }
    for (name, x) in [("C", c), ("T", t)] {
        for i in 0..n {
            let norm = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-4 {
                return Err(ClampError::NotUnit { which: name, row: i, norm });
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            out[i * n + k] = s * dot(c.row(i), t.row(k));
        }
    }
    Ok(Tensor::new(vec![n, n], out)?)
}

/// Symmetric contrastive loss of a `B × B` logit matrix.
pub fn clamp_loss(logits: &Tensor<f64>) -> Result<f64, ClampError> {
    let mut tape = Tape::new();
    let l = tape.constant(logits.clone());
    let loss = clamp_loss_var(&mut tape, l)?;
    Ok(tape.value(loss).item())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit embedding of one crystal graph.
pub fn embed_crystal<T: Scalar>(graph: &CrystalGraph, params: &ClampParams<Tensor<T>>) -> Result<Vec<f64>, ClampError> {
    Ok(embed_crystals(&[graph], params)?.row(0).to_vec())
}

/// Unit embedding of one text.
pub fn embed_text<T: Scalar>(text: &str, vocab: &Vocab, params: &ClampParams<Tensor<T>>) -> Result<Vec<f64>, ClampError> {
    Ok(embed_texts(&[vocab.tokenize(text)], params)?.row(0).to_vec())
}

/// Unit embeddings for a batch of graphs, `N × d`, computed in one pass.
pub fn embed_crystals<T: Scalar>(graphs: &[&CrystalGraph], params: &ClampParams<Tensor<T>>) -> Result<Tensor<f64>, ClampError> {
    let mut tape = Tape::new();
    let p = bind_constants(&mut tape, params);
    let e = crystal_embeddings(&mut tape, &p, graphs)?;
    Ok(tape.value(e).cast())
}

/// Unit embeddings for a batch of tokenized texts, `N × d`.
pub fn embed_texts<T: Scalar>(texts: &[Tokens], params: &ClampParams<Tensor<T>>) -> Result<Tensor<f64>, ClampError> {
    let mut tape = Tape::new();
    let p = bind_constants(&mut tape, params);
    let refs: Vec<&Tokens> = texts.iter().collect();
    let e = text_embeddings(&mut tape, &p, &refs)?;
    Ok(tape.value(e).cast())
}
