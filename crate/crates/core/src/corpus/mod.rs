//! Crystal–text pair manifests, integrity validation, deterministic splits and
//! batches, and a synthetic corpus generator.

mod manifest;
mod split;
mod synth;
mod validate;

pub use manifest::{load_manifest, parse_manifest, write_manifest, PairRecord};
pub use split::{batches, is_val, split, SplitSpec};
pub use synth::{element_phrase, synth_corpus, synth_records, SynthClass, SynthRecord, SyntheticSpec};
pub use validate::{check_record, validate, RecordIssue, RecordStatus, ValidRecord, ValidationPolicy, ValidationReport};

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("split: {0}")]
    Split(String),
    #[error("batching: {0}")]
    Batch(String),
    #[error("{0}")]
    Invalid(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}
