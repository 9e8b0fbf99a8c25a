use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cifparse::parse_structure;
use crate::clamp::{
    embed_crystals, embed_texts, loss_and_grads, pair_matching_accuracy, recall_at_k, ClampError, ClampParams,
    EmbeddingMatrix, ZeroShotResult,
};
use crate::corpus::{batches, load_manifest, split, validate, PairRecord, SplitSpec, ValidationPolicy, ValidationReport};
use crate::crystal::{build_graph, CrystalGraph, GraphConfig};
use crate::encoders::{build_vocab, Tokens};
use crate::numcore::{adam_step, AdamState, Scalar, Tensor};

use super::{AnyParams, Checkpoint, Modality, PipelineError, RunConfig};

/// Rows embedded per forward pass when embedding a whole gallery.
const EMBED_CHUNK: usize = 128;

/// Full-gallery retrieval scores. Recall@k uses `min(k, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub crystal_to_text: f64,
    pub text_to_crystal: f64,
    pub recall_at_1: f64,
    pub recall_at_5: f64,
    pub recall_at_10: f64,
}

impl RetrievalMetrics {
    pub fn compute(c: &Tensor<f64>, t: &Tensor<f64>) -> Result<Self, ClampError> {
        let n = c.shape()[0];
        let acc = pair_matching_accuracy(c, t)?;
        Ok(RetrievalMetrics {
            crystal_to_text: acc.crystal_to_text,
            text_to_crystal: acc.text_to_crystal,
            recall_at_1: recall_at_k(c, t, 1)?,
            recall_at_5: recall_at_k(c, t, 5.min(n))?,
            recall_at_10: recall_at_k(c, t, 10.min(n))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean batch loss over the epoch.
    pub train_loss: f64,
    pub val: RetrievalMetrics,
}

/// Training report. Holds only values fixed by config and seed; wall-clock
/// time is kept apart in [`TrainOutcome::seconds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub vocab_size: usize,
    pub batches_per_epoch: usize,
    /// Validation scores of the initial parameters.
    pub initial_val: RetrievalMetrics,
    pub epochs: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept as best (0 = initialization).
    pub best_epoch: usize,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: MetricsReport,
    pub final_checkpoint: Checkpoint,
    pub best_checkpoint: Checkpoint,
    pub seconds: f64,
}

impl TrainOutcome {
    /// `final.ckpt`, `best.ckpt`, `metrics.json` and `timing.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        self.final_checkpoint.save(&dir.join("final.ckpt"))?;
        self.best_checkpoint.save(&dir.join("best.ckpt"))?;
        write_json(&dir.join("metrics.json"), &self.report)?;
        write_json(&dir.join("timing.json"), &serde_json::json!({"wall_clock_seconds": self.seconds}))
    }
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Records that passed validation, with their graphs, in manifest order.
#[derive(Debug, Clone)]
pub struct Usable {
    pub records: Vec<PairRecord>,
    pub graphs: Vec<CrystalGraph>,
    pub report: ValidationReport,
}

/// Load a manifest, validate every CIF and build graphs. With `strict`, any
/// excluded record is an error.
pub fn load_usable(
    manifest: &Path,
    policy: ValidationPolicy,
    graph: &GraphConfig,
    strict: bool,
) -> Result<Usable, PipelineError> {
    let records = load_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let (report, valid) = validate(&records, base, policy);
    if strict && report.excluded > 0 {
        let names: Vec<String> =
            report.issues.iter().filter(|i| i.excluded).take(5).map(|i| format!("{} ({})", i.id, i.message)).collect();
        return Err(PipelineError::Data(format!("{} record(s) failed validation: {}", report.excluded, names.join("; "))));
    }
    let graphs = valid
        .par_iter()
        .map(|v| build_graph(&v.structure, graph).map_err(|e| PipelineError::Data(format!("{}: {e}", v.record.id))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Usable { records: valid.into_iter().map(|v| v.record).collect(), graphs, report })
}

fn chunked<R>(n: usize, mut f: impl FnMut(std::ops::Range<usize>) -> Result<Tensor<f64>, R>) -> Result<Tensor<f64>, R> {
    let mut data = Vec::new();
    let mut d = 0;
    for start in (0..n).step_by(EMBED_CHUNK) {
        let t = f(start..(start + EMBED_CHUNK).min(n))?;
        d = t.shape()[1];
        data.extend_from_slice(t.data());
    }
    Ok(Tensor::new(vec![n, d], data).expect("chunks share a width"))
}

fn gallery<T: Scalar>(
    graphs: &[&CrystalGraph],
    tokens: &[Tokens],
    params: &ClampParams<Tensor<T>>,
) -> Result<(Tensor<f64>, Tensor<f64>), ClampError> {
    let c = chunked(graphs.len(), |r| embed_crystals(&graphs[r], params))?;
    let t = chunked(tokens.len(), |r| embed_texts(&tokens[r], params))?;
    Ok((c, t))
}

fn any_gallery(params: &AnyParams, graphs: &[&CrystalGraph], tokens: &[Tokens]) -> Result<(Tensor<f64>, Tensor<f64>), ClampError> {
    match params {
        AnyParams::F32(p) => gallery(graphs, tokens, p),
        AnyParams::F64(p) => gallery(graphs, tokens, p),
    }
}

struct Prepared<'a> {
    train_graphs: Vec<&'a CrystalGraph>,
    train_tokens: Vec<Tokens>,
    train_texts: Vec<&'a str>,
    val_graphs: Vec<&'a CrystalGraph>,
    val_tokens: Vec<Tokens>,
}

/// Train from scratch on the records of `manifest`. `progress` receives one
/// human-readable line per epoch.
pub fn train(cfg: &RunConfig, manifest: &Path, progress: &mut dyn FnMut(&str)) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    let start = Instant::now();
    let usable = load_usable(manifest, cfg.data.policy, &cfg.graph, false)?;
    let items: Vec<(usize, &PairRecord)> = usable.records.iter().enumerate().collect();
    let spec = SplitSpec { val_fraction: cfg.data.val_fraction, seed: cfg.train.seed };
    let (train, val) = split(&items, |x| x.1.id.as_str(), &spec)?;
    let train_idx: Vec<usize> = train.iter().map(|x| x.0).collect();
    let val_idx: Vec<usize> = val.iter().map(|x| x.0).collect();
    if train_idx.len() < cfg.train.batch_size {
        return Err(PipelineError::Data(format!(
            "batch size {} exceeds the {} usable training records",
            cfg.train.batch_size,
            train_idx.len()
        )));
    }
    let train_texts: Vec<&str> = train_idx.iter().map(|&i| usable.records[i].text.as_str()).collect();
    let vocab = build_vocab(&train_texts, cfg.model.vocab_size, cfg.model.max_len)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    let prep = Prepared {
        train_graphs: train_idx.iter().map(|&i| &usable.graphs[i]).collect(),
        train_tokens: train_texts.iter().map(|t| vocab.tokenize(t)).collect(),
        train_texts,
        val_graphs: val_idx.iter().map(|&i| &usable.graphs[i]).collect(),
        val_tokens: val_idx.iter().map(|&i| vocab.tokenize(&usable.records[i].text)).collect(),
    };
    let dims = cfg.dims(vocab.len());
    let init = AnyParams::init(&dims, cfg.train.seed, cfg.train.dtype)?;
    let (final_params, best_params, report) = match init {
        AnyParams::F32(p) => {
            let (f, b, r) = train_typed(cfg, &prep, p, progress)?;
            (AnyParams::F32(f), AnyParams::F32(b), r)
        }
        AnyParams::F64(p) => {
            let (f, b, r) = train_typed(cfg, &prep, p, progress)?;
            (AnyParams::F64(f), AnyParams::F64(b), r)
        }
    };
    let report = MetricsReport {
        n_train: train_idx.len(),
        n_val: val_idx.len(),
        vocab_size: vocab.len(),
        validation: usable.report,
        ..report
    };
    let ckpt = |params, epoch| Checkpoint { config: cfg.clone(), vocab: vocab.clone(), params, epoch, history: report.epochs.clone() };
    Ok(TrainOutcome {
        final_checkpoint: ckpt(final_params, report.epochs.len()),
        best_checkpoint: ckpt(best_params, report.best_epoch),
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

type Trained<T> = (ClampParams<Tensor<T>>, ClampParams<Tensor<T>>, MetricsReport);

fn train_typed<T: Scalar>(
    cfg: &RunConfig,
    prep: &Prepared<'_>,
    mut params: ClampParams<Tensor<T>>,
    progress: &mut dyn FnMut(&str),
) -> Result<Trained<T>, PipelineError> {
    let adam = cfg.train.adam();
    let b = cfg.train.batch_size;
    let val = |p: &ClampParams<Tensor<T>>| -> Result<RetrievalMetrics, PipelineError> {
        let (c, t) = gallery(&prep.val_graphs, &prep.val_tokens, p)?;
        Ok(RetrievalMetrics::compute(&c, &t)?)
    };
    let initial_val = val(&params)?;
    let mut state = AdamState::new(params.tensors().into_iter().map(|t| t.shape()));
    let mut best = (0usize, initial_val.crystal_to_text, params.clone());
    let mut epochs = Vec::with_capacity(cfg.train.epochs);
    let mut n_batches = 0;
    for epoch in 1..=cfg.train.epochs {
        let plan = batches(&prep.train_texts, b, cfg.train.seed, epoch as u64)?;
        n_batches = plan.len();
        let mut total = 0.0;
        for (bi, batch) in plan.iter().enumerate() {
            let graphs: Vec<&CrystalGraph> = batch.iter().map(|&i| prep.train_graphs[i]).collect();
            let texts: Vec<&Tokens> = batch.iter().map(|&i| &prep.train_tokens[i]).collect();
            let (loss, grads) = loss_and_grads(&params, &graphs, &texts)?;
            if !loss.is_finite() {
                return Err(PipelineError::Numeric(format!("non-finite loss at epoch {epoch}, batch {bi}")));
            }
            let grads: Vec<Tensor<T>> = grads.tensors().into_iter().cloned().collect();
            adam_step(&mut params.tensors_mut(), &grads, &mut state, &adam)
                .map_err(|e| PipelineError::Numeric(format!("epoch {epoch}, batch {bi}: {e}")))?;
            total += loss;
        }
        let m = EpochMetrics { epoch, train_loss: total / plan.len() as f64, val: val(&params)? };
        progress(&format!(
            "epoch {epoch}: train loss {:.4}, val c->t {:.3}, t->c {:.3}, R@5 {:.3}",
            m.train_loss, m.val.crystal_to_text, m.val.text_to_crystal, m.val.recall_at_5
        ));
        if m.val.crystal_to_text > best.1 {
            best = (epoch, m.val.crystal_to_text, params.clone());
        }
        epochs.push(m);
    }
    let report = MetricsReport {
        seed: cfg.train.seed,
        n_train: 0,
        n_val: 0,
        vocab_size: 0,
        batches_per_epoch: n_batches,
        initial_val,
        epochs,
        best_epoch: best.0,
        validation: empty_report(cfg.data.policy),
    };
    Ok((params, best.2, report))
}

fn empty_report(policy: ValidationPolicy) -> ValidationReport {
    validate(&[], Path::new("."), policy).0
}

/// Full-gallery scores for a checkpoint over `usable`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    #[serde(flatten)]
    pub metrics: RetrievalMetrics,
}

/// Embed both modalities and score pair matching. Records are taken in id
/// order, so the result does not depend on manifest line order.
pub fn evaluate(ckpt: &Checkpoint, usable: &Usable) -> Result<EvalReport, PipelineError> {
    if usable.records.is_empty() {
        return Err(PipelineError::Data("no usable records to evaluate".into()));
    }
    let mut order: Vec<usize> = (0..usable.records.len()).collect();
    order.sort_by(|&a, &b| usable.records[a].id.cmp(&usable.records[b].id));
    let graphs: Vec<&CrystalGraph> = order.iter().map(|&i| &usable.graphs[i]).collect();
    let tokens: Vec<Tokens> = order.iter().map(|&i| ckpt.vocab.tokenize(&usable.records[i].text)).collect();
    let (c, t) = any_gallery(&ckpt.params, &graphs, &tokens)?;
    Ok(EvalReport { n: order.len(), metrics: RetrievalMetrics::compute(&c, &t)? })
}

/// One unit row per record, in manifest order.
pub fn embed_records(ckpt: &Checkpoint, usable: &Usable, modality: Modality) -> Result<EmbeddingMatrix, PipelineError> {
    let n = usable.records.len();
    let rows = match modality {
        Modality::Crystal => {
            let graphs: Vec<&CrystalGraph> = usable.graphs.iter().collect();
            chunked(n, |r| ckpt.params.embed_crystals(&graphs[r]))?
        }
        Modality::Text => {
            let tokens: Vec<Tokens> = usable.records.iter().map(|r| ckpt.vocab.tokenize(&r.text)).collect();
            chunked(n, |r| ckpt.params.embed_texts(&tokens[r]))?
        }
    };
    let ids = usable.records.iter().map(|r| r.id.clone()).collect();
    Ok(EmbeddingMatrix::new(ids, rows.cast())?)
}

/// Rank `prompts` against the crystal in `cif`.
pub fn classify<S: AsRef<str>>(ckpt: &Checkpoint, cif: &str, prompts: &[S]) -> Result<ZeroShotResult, PipelineError> {
    if prompts.is_empty() {
        return Err(PipelineError::Usage("prompt file is empty".into()));
    }
    let structure = parse_structure(cif).map_err(|e| PipelineError::Data(format!("CIF: {e}")))?;
    let graph = build_graph(&structure, &ckpt.config.graph)?;
    let c = ckpt.params.embed_crystals(&[&graph])?;
    Ok(ckpt.params.zero_shot(c.row(0), prompts, &ckpt.vocab)?)
}
