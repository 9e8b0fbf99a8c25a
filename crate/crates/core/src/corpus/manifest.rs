use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// One crystal–text training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    /// CIF path relative to the manifest's directory.
    pub cif: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl PairRecord {
    /// First label, if any.
    pub fn label(&self) -> Option<&str> {
        self.labels.as_ref().and_then(|l| l.first()).map(String::as_str)
    }
}

/// Parse JSON-lines manifest text. Line numbers in errors are 1-based.
pub fn parse_manifest(text: &str) -> Result<Vec<PairRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(line)
            .map_err(|e| CorpusError::Manifest { line: line_no, message: e.to_string() })?;
        if rec.text.trim().is_empty() {
            return Err(CorpusError::Manifest { line: line_no, message: format!("record {:?} has empty text", rec.id) });
        }
        if rec.id.is_empty() {
            return Err(CorpusError::Manifest { line: line_no, message: "empty id".into() });
        }
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::Manifest { line: line_no, message: format!("duplicate id {:?}", rec.id) });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Read and parse a manifest file.
pub fn load_manifest(path: &Path) -> Result<Vec<PairRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_manifest(&text)
}

/// Serialize records as JSON lines, one per record, trailing newline.
pub fn write_manifest(records: &[PairRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}
