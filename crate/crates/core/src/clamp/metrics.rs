use std::collections::HashSet;

use crate::encoders::Vocab;
use crate::numcore::{Scalar, Tensor};

use super::model::{dot, embed_texts};
use super::{ClampError, ClampParams};

/// Labels ranked by cosine, best first; ties go to the lower label index.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotResult {
    pub ranking: Vec<(usize, f64)>,
}

impl ZeroShotResult {
    pub fn chosen(&self) -> usize {
        self.ranking[0].0
    }
}

/// Rank label embeddings (rows) against a crystal embedding.
pub fn rank_labels(crystal: &[f64], labels: &Tensor<f64>) -> Result<ZeroShotResult, ClampError> {
    let (n, d) = labels.dims2()?;
    if n == 0 {
        return Err(ClampError::EmptyPrompts);
    }
    if d != crystal.len() {
        return Err(ClampError::Invalid(format!("label dim {d} vs crystal dim {}", crystal.len())));
    }
    let mut ranking: Vec<(usize, f64)> = (0..n).map(|i| (i, dot(crystal, labels.row(i)))).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ZeroShotResult { ranking })
}

/// Embed each prompt and rank them against `crystal` (a unit vector).
pub fn zero_shot<T: Scalar, S: AsRef<str>>(
    crystal: &[f64],
    prompts: &[S],
    vocab: &Vocab,
    params: &ClampParams<Tensor<T>>,
) -> Result<ZeroShotResult, ClampError> {
    if prompts.is_empty() {
        return Err(ClampError::EmptyPrompts);
    }
    let toks: Vec<_> = prompts.iter().map(|p| vocab.tokenize(p.as_ref())).collect();
    rank_labels(crystal, &embed_texts(&toks, params)?)
}

/// Rank of the true partner of every query row: the number of gallery rows
/// that beat it, where equal scores at lower indices also beat it.
fn partner_ranks(queries: &Tensor<f64>, gallery: &Tensor<f64>) -> Result<Vec<usize>, ClampError> {
    let (n, d) = queries.dims2()?;
    let (m, d2) = gallery.dims2()?;
    if n == 0 {
        return Err(ClampError::Invalid("empty gallery".into()));
    }
    if n != m || d != d2 {
        return Err(ClampError::Invalid(format!("unaligned embeddings {:?} vs {:?}", queries.shape(), gallery.shape())));
    }
    Ok((0..n)
        .map(|i| {
            let q = queries.row(i);
            let own = dot(q, gallery.row(i));
            (0..n)
                .filter(|&k| {
                    let s = dot(q, gallery.row(k));
                    s > own || (s == own && k < i)
                })
                .count()
        })
        .collect())
}

/// Pair-matching accuracy over the full gallery.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairAccuracy {
    pub crystal_to_text: f64,
    pub text_to_crystal: f64,
}

/// Fraction of rows whose nearest neighbor in the other modality is their own partner.
pub fn pair_matching_accuracy(c: &Tensor<f64>, t: &Tensor<f64>) -> Result<PairAccuracy, ClampError> {
    let hit = |r: Vec<usize>| r.iter().filter(|&&x| x == 0).count() as f64 / r.len() as f64;
    Ok(PairAccuracy { crystal_to_text: hit(partner_ranks(c, t)?), text_to_crystal: hit(partner_ranks(t, c)?) })
}

/// Crystal→text recall@k: fraction of crystals whose text ranks in the top `k`.
pub fn recall_at_k(c: &Tensor<f64>, t: &Tensor<f64>, k: usize) -> Result<f64, ClampError> {
    let ranks = partner_ranks(c, t)?;
    if k == 0 || k > ranks.len() {
        return Err(ClampError::Invalid(format!("k = {k} outside 1..={}", ranks.len())));
    }
    Ok(ranks.iter().filter(|&&r| r < k).count() as f64 / ranks.len() as f64)
}

/// Record ids with one unit embedding row each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    /// `N × d`
    pub rows: Tensor<f32>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, rows: Tensor<f32>) -> Result<Self, ClampError> {
        let (n, _) = rows.dims2()?;
        if n != ids.len() {
            return Err(ClampError::Invalid(format!("{} ids for {n} rows", ids.len())));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(ClampError::Invalid(format!("duplicate id {dup:?}")));
        }
        for i in 0..n {
            let norm = rows.row(i).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-5 {
                return Err(ClampError::NotUnit { which: "embedding", row: i, norm });
            }
        }
        Ok(EmbeddingMatrix { ids, rows })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
