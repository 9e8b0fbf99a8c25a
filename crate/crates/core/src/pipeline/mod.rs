//! Run configuration, checkpoints and the train / eval / embed / classify
//! workflows the command-line tool drives.

mod checkpoint;
mod config;
mod container;
mod run;

pub use checkpoint::{load_embeddings, save_embeddings, AnyParams, Checkpoint, Modality};
pub use config::{DataConfig, ModelConfig, RunConfig, TrainConfig, TrainDType};
pub use container::{Container, ContainerError, SectionData, MAGIC, VERSION};
pub use run::{
    classify, evaluate, embed_records, load_usable, train, EpochMetrics, EvalReport, MetricsReport, RetrievalMetrics,
    TrainOutcome, Usable,
};

use std::path::{Path, PathBuf};

use crate::clamp::ClampError;
use crate::corpus::CorpusError;
use crate::crystal::CrystalError;
use crate::numcore::NumError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Container { path: PathBuf, source: ContainerError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl PipelineError {
    /// Process exit code: 1 usage or config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) => 1,
            PipelineError::Data(_) | PipelineError::Container { .. } | PipelineError::Io { .. } => 2,
            PipelineError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<CrystalError> for PipelineError {
    fn from(e: CrystalError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<NumError> for PipelineError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::NonFinite { .. } | NumError::ZeroRow { .. } => PipelineError::Numeric(e.to_string()),
            e => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<ClampError> for PipelineError {
    fn from(e: ClampError) -> Self {
        match e {
            ClampError::Num(n) => n.into(),
            ClampError::EmptyPrompts => PipelineError::Usage(e.to_string()),
            e => PipelineError::Data(e.to_string()),
        }
    }
}
