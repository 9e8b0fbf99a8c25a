use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clamp::{embed_crystals, embed_texts, zero_shot, ClampError, ClampParams, EmbeddingMatrix, ZeroShotResult};
use crate::crystal::CrystalGraph;
use crate::encoders::{Tokens, Vocab};
use crate::numcore::{Scalar, Tensor};

use super::container::{Container, SectionData};
use super::run::EpochMetrics;
use super::{PipelineError, RunConfig, TrainDType};

/// Parameters in whichever precision they were trained in.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyParams {
    F32(ClampParams<Tensor<f32>>),
    F64(ClampParams<Tensor<f64>>),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $body:expr) => {
        match $self {
            AnyParams::F32($p) => $body,
            AnyParams::F64($p) => $body,
        }
    };
}

impl AnyParams {
    pub fn init(dims: &crate::clamp::ModelDims, seed: u64, dtype: TrainDType) -> Result<Self, PipelineError> {
        Ok(match dtype {
            TrainDType::F32 => AnyParams::F32(ClampParams::init(dims, seed)?),
            TrainDType::F64 => AnyParams::F64(ClampParams::init(dims, seed)?),
        })
    }

    pub fn dtype(&self) -> TrainDType {
        match self {
            AnyParams::F32(_) => TrainDType::F32,
            AnyParams::F64(_) => TrainDType::F64,
        }
    }

    pub fn embed_crystals(&self, graphs: &[&CrystalGraph]) -> Result<Tensor<f64>, ClampError> {
        dispatch!(self, p => embed_crystals(graphs, p))
    }

    pub fn embed_texts(&self, texts: &[Tokens]) -> Result<Tensor<f64>, ClampError> {
        dispatch!(self, p => embed_texts(texts, p))
    }

    pub fn zero_shot<S: AsRef<str>>(&self, crystal: &[f64], prompts: &[S], vocab: &Vocab) -> Result<ZeroShotResult, ClampError> {
        dispatch!(self, p => zero_shot(crystal, prompts, vocab, p))
    }

    fn sections(&self) -> Vec<(String, SectionData)> {
        dispatch!(self, p => p.named().into_iter().map(|(n, t)| (n, SectionData::from(t.clone()))).collect())
    }
}

/// A saved model: config, vocabulary, training history and every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub vocab: Vocab,
    pub params: AnyParams,
    /// Epochs of training behind these parameters (0 = initialization).
    pub epoch: usize,
    pub history: Vec<EpochMetrics>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    kind: String,
    config: RunConfig,
    vocab: Vocab,
    dtype: TrainDType,
    epoch: usize,
    history: Vec<EpochMetrics>,
}

fn collect_params<T: Scalar>(
    shapes: &ClampParams<Vec<usize>>,
    c: &Container,
) -> Result<ClampParams<Tensor<T>>, String> {
    let mut err = None;
    let p = shapes.map(&mut |name, shape| {
        let found = match c.section(name) {
            None => Err(format!("missing tensor section {name:?}")),
            Some(s) => match s.tensor::<T>() {
                None => Err(format!("section {name:?} has the wrong dtype")),
                Some(t) if t.shape() != shape.as_slice() => {
                    Err(format!("section {name:?} has shape {:?}, config expects {shape:?}", t.shape()))
                }
                Some(t) => Ok(t),
            },
        };
        found.unwrap_or_else(|e| {
            err.get_or_insert(e);
            Tensor::zeros(shape)
        })
    });
    match err {
        Some(e) => Err(e),
        None => Ok(p),
    }
}

impl Checkpoint {
    pub fn to_container(&self) -> Container {
        let meta = CheckpointMeta {
            kind: "checkpoint".into(),
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            dtype: self.params.dtype(),
            epoch: self.epoch,
            history: self.history.clone(),
        };
        let mut c = Container::new(serde_json::to_value(meta).expect("metadata serializes"));
        for (name, data) in self.params.sections() {
            c.push(name, data);
        }
        c
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_container().to_bytes()
    }

    /// Decode and check magic, version, checksum, and every tensor shape against the config.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, PipelineError> {
        let c = Container::from_bytes(bytes).map_err(|source| PipelineError::Container { path: path.into(), source })?;
        let bad = |m: String| PipelineError::Data(format!("{}: {m}", path.display()));
        let meta: CheckpointMeta = serde_json::from_value(c.metadata.clone()).map_err(|e| bad(format!("metadata: {e}")))?;
        if meta.kind != "checkpoint" {
            return Err(bad(format!("expected a checkpoint, found {:?}", meta.kind)));
        }
        meta.config.validate().map_err(|e| bad(e.to_string()))?;
        if meta.vocab.max_len() != meta.config.model.max_len {
            return Err(bad("vocabulary max_len disagrees with config".into()));
        }
        let dims = meta.config.dims(meta.vocab.len());
        let shapes = ClampParams::shapes(&dims);
        let expected = shapes.named().len();
        if c.sections.len() != expected {
            return Err(bad(format!("{} tensor sections, config expects {expected}", c.sections.len())));
        }
        let params = match meta.dtype {
            TrainDType::F32 => AnyParams::F32(collect_params(&shapes, &c).map_err(bad)?),
            TrainDType::F64 => AnyParams::F64(collect_params(&shapes, &c).map_err(bad)?),
        };
        Ok(Checkpoint { config: meta.config, vocab: meta.vocab, params, epoch: meta.epoch, history: meta.history })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| PipelineError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// Which tower an embedding file came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Crystal,
    Text,
}

/// Write ids and unit rows as sections `"ids"` and `"rows"`.
pub fn save_embeddings(path: &Path, m: &EmbeddingMatrix, modality: Modality) -> Result<(), PipelineError> {
    let mut c = Container::new(json!({"kind": "embeddings", "modality": modality}));
    c.push("ids", SectionData::Strings(m.ids.clone()));
    c.push("rows", m.rows.clone());
    std::fs::write(path, c.to_bytes()).map_err(|e| PipelineError::io(path, e))
}

pub fn load_embeddings(path: &Path) -> Result<(EmbeddingMatrix, Modality), PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let c = Container::from_bytes(&bytes).map_err(|source| PipelineError::Container { path: path.into(), source })?;
    let bad = |m: &str| PipelineError::Data(format!("{}: {m}", path.display()));
    if c.metadata.get("kind").and_then(|k| k.as_str()) != Some("embeddings") {
        return Err(bad("not an embedding file"));
    }
    let modality: Modality = serde_json::from_value(c.metadata["modality"].clone()).map_err(|_| bad("bad modality"))?;
    let ids = match c.section("ids") {
        Some(SectionData::Strings(s)) => s.clone(),
        _ => return Err(bad("missing ids section")),
    };
    let rows = c.section("rows").and_then(|s| s.tensor::<f32>()).ok_or_else(|| bad("missing f32 rows section"))?;
    let m = EmbeddingMatrix::new(ids, rows).map_err(|e| bad(&e.to_string()))?;
    Ok((m, modality))
}
