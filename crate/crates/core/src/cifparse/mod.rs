//! CIF 1.1 reader: tokenizer, first-block document model, symmetry
//! operations, and expansion to a P1 crystal structure.

mod document;
mod structure;
mod symop;

pub use document::{parse, parse_number, CifDocument, CifLoop, CifValue};
pub use structure::{parse_structure, symmetry_ops, to_structure, write_p1, DEFAULT_DEDUP_TOL};
pub use symop::{parse_symop, SymmetryOp};

use crate::crystal::CrystalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CifError {
    #[error("no data_ block")]
    NoDataBlock,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unterminated {what}")]
    Unterminated { what: &'static str, line: usize },
    #[error("line {line}: unsupported CIF feature: {feature}")]
    Unsupported { feature: &'static str, line: usize },
    #[error("line {line}: loop has {tags} tags but {cells} cells")]
    LoopArity { line: usize, tags: usize, cells: usize },
    #[error("missing required tag {0}")]
    MissingTag(String),
    #[error("tag {tag}: not a number: {value}")]
    BadNumber { tag: String, value: String },
    #[error("no atom sites")]
    NoSites,
    #[error("unresolvable element symbol '{0}'")]
    UnknownElement(String),
    #[error("symmetry operation '{expr}': {reason}")]
    Symop { expr: String, reason: String },
    #[error(transparent)]
    Crystal(#[from] CrystalError),
}

impl CifError {
    pub fn is_degenerate_cell(&self) -> bool {
        matches!(self, CifError::Crystal(CrystalError::DegenerateCell { .. }))
    }
}
