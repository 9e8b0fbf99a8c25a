use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clamp::ModelDims;
use crate::corpus::ValidationPolicy;
use crate::crystal::GraphConfig;
use crate::numcore::AdamConfig;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_v: usize,
    pub conv_layers: usize,
    pub d_m: usize,
    pub text_layers: usize,
    pub heads: usize,
    /// Shared embedding dimension.
    pub d: usize,
    pub max_len: usize,
    /// Upper bound on vocabulary size, reserved tokens included.
    pub vocab_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { d_v: 64, conv_layers: 3, d_m: 128, text_layers: 2, heads: 4, d: 64, max_len: 64, vocab_size: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainDType {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub dtype: TrainDType,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            batch_size: 32,
            epochs: 5,
            lr: 3e-4,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            seed: 42,
            dtype: TrainDType::F32,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Relative paths resolve against the config file's directory.
    pub manifest: Option<PathBuf>,
    pub val_fraction: f64,
    pub policy: ValidationPolicy,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { manifest: None, val_fraction: 0.1, policy: ValidationPolicy::Default }
    }
}

/// Everything a training run depends on. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; a relative manifest path is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        if let Some(m) = &cfg.data.manifest {
            if m.is_relative() {
                cfg.data.manifest = Some(path.parent().unwrap_or(Path::new(".")).join(m));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let m = &self.model;
        if m.vocab_size < 5 {
            return bad(format!("model.vocab_size must be >= 5, got {}", m.vocab_size));
        }
        self.dims(m.vocab_size).validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.graph.gaussian.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.graph.cutoff > 0.0) || self.graph.max_neighbors == 0 {
            return bad("graph.cutoff must be > 0 and graph.max_neighbors >= 1".into());
        }
        let t = &self.train;
        if t.batch_size < 2 {
            return bad(format!("train.batch_size must be >= 2, got {}", t.batch_size));
        }
        if !(t.lr > 0.0) || !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) || !(t.eps > 0.0) {
            return bad("train: need lr > 0, 0 <= beta1, beta2 < 1, eps > 0".into());
        }
        if !(self.data.val_fraction > 0.0 && self.data.val_fraction < 1.0) {
            return bad(format!("data.val_fraction must be in (0, 1), got {}", self.data.val_fraction));
        }
        Ok(())
    }

    /// Model layout for a vocabulary of `vocab_len` tokens.
    pub fn dims(&self, vocab_len: usize) -> ModelDims {
        let m = &self.model;
        ModelDims {
            d_v: m.d_v,
            conv_layers: m.conv_layers,
            edge_width: self.graph.gaussian.width(),
            d_m: m.d_m,
            text_layers: m.text_layers,
            heads: m.heads,
            max_len: m.max_len,
            vocab_size: vocab_len,
            d: m.d,
        }
    }
}
