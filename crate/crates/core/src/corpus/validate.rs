use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PairRecord;
use crate::cifparse::{parse_structure, CifError};
use crate::crystal::CrystalStructure;

/// Outcome of checking one record's CIF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok,
    ParseError,
    DegenerateCell,
    PartialOccupancyFlag,
    ElementUnresolved,
}

impl RecordStatus {
    pub const ALL: [RecordStatus; 5] = [
        RecordStatus::Ok,
        RecordStatus::ParseError,
        RecordStatus::DegenerateCell,
        RecordStatus::PartialOccupancyFlag,
        RecordStatus::ElementUnresolved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::ParseError => "parse-error",
            RecordStatus::DegenerateCell => "degenerate-cell",
            RecordStatus::PartialOccupancyFlag => "partial-occupancy-flag",
            RecordStatus::ElementUnresolved => "element-unresolved",
        }
    }
}

/// Which flags exclude a record. Hard failures always exclude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationPolicy {
    /// Partially occupied sites are kept (treated as full atoms) and flagged.
    #[default]
    Default,
    ExcludePartial,
}

impl ValidationPolicy {
    pub fn excludes(self, status: RecordStatus) -> bool {
        match status {
            RecordStatus::Ok => false,
            RecordStatus::PartialOccupancyFlag => self == ValidationPolicy::ExcludePartial,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordIssue {
    pub id: String,
    pub status: RecordStatus,
    pub message: String,
    pub excluded: bool,
}

/// Per-status counts plus every non-ok record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub policy: ValidationPolicy,
    pub total: usize,
    pub passed: usize,
    pub excluded: usize,
    pub counts: BTreeMap<String, usize>,
    pub issues: Vec<RecordIssue>,
}

/// A record that passed validation, with its parsed structure.
#[derive(Debug, Clone)]
pub struct ValidRecord {
    pub record: PairRecord,
    pub structure: CrystalStructure,
    pub status: RecordStatus,
}

/// Parse and classify one record's CIF.
pub fn check_record(record: &PairRecord, base: &Path) -> (RecordStatus, Result<CrystalStructure, String>) {
    let path = base.join(&record.cif);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return (RecordStatus::ParseError, Err(format!("{}: {e}", path.display()))),
    };
    match parse_structure(&text) {
        Ok(s) if s.has_partial_occupancy() => (RecordStatus::PartialOccupancyFlag, Ok(s)),
        Ok(s) => (RecordStatus::Ok, Ok(s)),
        Err(e) => {
            let status = match &e {
                CifError::UnknownElement(_) => RecordStatus::ElementUnresolved,
                e if e.is_degenerate_cell() => RecordStatus::DegenerateCell,
                _ => RecordStatus::ParseError,
            };
            (status, Err(e.to_string()))
        }
    }
}

/// Check every record's CIF (paths relative to `base`). Records are never
/// modified; passing records keep their input order.
pub fn validate(records: &[PairRecord], base: &Path, policy: ValidationPolicy) -> (ValidationReport, Vec<ValidRecord>) {
    let checked: Vec<_> = records.par_iter().map(|r| check_record(r, base)).collect();
    let mut counts: BTreeMap<String, usize> = RecordStatus::ALL.iter().map(|s| (s.as_str().to_string(), 0)).collect();
    let mut issues = Vec::new();
    let mut passed = Vec::new();
    for (record, (status, result)) in records.iter().zip(checked) {
        *counts.get_mut(status.as_str()).unwrap() += 1;
        let excluded = policy.excludes(status);
        if status != RecordStatus::Ok {
            let message = match &result {
                Ok(_) => "partially occupied sites treated as full atoms".to_string(),
                Err(m) => m.clone(),
            };
            issues.push(RecordIssue { id: record.id.clone(), status, message, excluded });
        }
        if let (false, Ok(structure)) = (excluded, result) {
            passed.push(ValidRecord { record: record.clone(), structure, status });
        }
    }
    let report = ValidationReport {
        policy,
        total: records.len(),
        passed: passed.len(),
        excluded: records.len() - passed.len(),
        counts,
        issues,
    };
    (report, passed)
}
