use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::numcore::rng::{derive_seed, hash64, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub val_fraction: f64,
    pub seed: u64,
}

/// True when `id` belongs to the validation side: `hash64(seed, id) / 2⁶⁴ < fraction`.
pub fn is_val(id: &str, spec: &SplitSpec) -> bool {
    (hash64(spec.seed, id) as f64) / 18_446_744_073_709_551_616.0 < spec.val_fraction
}

/// Partition items by a hash of their id; order within each side is preserved.
pub fn split<R: Clone>(items: &[R], id: impl Fn(&R) -> &str, spec: &SplitSpec) -> Result<(Vec<R>, Vec<R>), CorpusError> {
    if !(spec.val_fraction > 0.0 && spec.val_fraction < 1.0) {
        return Err(CorpusError::Split(format!("val_fraction must be in (0, 1), got {}", spec.val_fraction)));
    }
    if items.len() < 2 {
        return Err(CorpusError::Split(format!("need at least 2 records to split, got {}", items.len())));
    }
    let (val, train): (Vec<R>, Vec<R>) = items.iter().cloned().partition(|r| is_val(id(r), spec));
    if train.is_empty() {
        return Err(CorpusError::Split("empty train split".into()));
    }
    if val.is_empty() {
        return Err(CorpusError::Split("empty val split".into()));
    }
    Ok((train, val))
}

/// Epoch batches as index lists into `texts`.
///
/// Records are shuffled by a stream keyed on `(seed, epoch)`. Batches are filled
/// in shuffle order; a record whose text already appears in the batch being
/// filled is deferred to the next batch rather than dropped. A final batch that
/// cannot be filled to `b` is dropped.
pub fn batches<S: AsRef<str>>(texts: &[S], b: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>, CorpusError> {
    if b < 2 {
        return Err(CorpusError::Batch(format!("batch size must be >= 2, got {b}")));
    }
    let distinct: HashSet<&str> = texts.iter().map(|t| t.as_ref()).collect();
    if texts.len() < b || distinct.len() < b {
        return Err(CorpusError::Batch(format!(
            "batch size {b} exceeds usable records ({} records, {} distinct texts)",
            texts.len(),
            distinct.len()
        )));
    }
    let mut order: Vec<usize> = (0..texts.len()).collect();
    SplitMix64::new(derive_seed(seed, epoch)).shuffle(&mut order);
    let mut pending: VecDeque<usize> = order.into();
    let mut out = Vec::new();
    loop {
        let mut batch = Vec::with_capacity(b);
        let mut seen = HashSet::new();
        let mut deferred = Vec::new();
        while batch.len() < b {
            let Some(i) = pending.pop_front() else { break };
            if seen.insert(texts[i].as_ref()) {
                batch.push(i);
            } else {
                deferred.push(i);
            }
        }
        for &i in deferred.iter().rev() {
            pending.push_front(i);
        }
        if batch.len() < b {
            break;
        }
        out.push(batch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_records_batch_three() {
        let texts: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let b = batches(&texts, 3, 1, 0).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b, batches(&texts, 3, 1, 0).unwrap());
        assert_ne!(b, batches(&texts, 3, 1, 1).unwrap());
    }

    #[test]
    fn duplicates_never_share_a_batch() {
        let texts = ["same", "same", "a", "b"];
        for epoch in 0..50 {
            for batch in batches(&texts, 2, 9, epoch).unwrap() {
                assert!(!(batch.contains(&0) && batch.contains(&1)));
            }
        }
        assert!(batches(&["x", "x", "x"], 2, 0, 0).is_err());
        assert!(batches(&["x"], 2, 0, 0).is_err());
        assert!(batches(&["x", "y"], 1, 0, 0).is_err());
    }

    #[test]
    fn split_boundaries() {
        let ids: Vec<String> = (0..50).map(|i| format!("id{i}")).collect();
        let tiny = SplitSpec { val_fraction: 1e-300, seed: 3 };
        assert!(matches!(split(&ids, |s| s, &tiny), Err(CorpusError::Split(m)) if m.contains("empty val")));
        assert!(split(&ids, |s| s, &SplitSpec { val_fraction: 0.0, seed: 3 }).is_err());
        assert!(split(&ids[..1], |s| s, &SplitSpec { val_fraction: 0.5, seed: 3 }).is_err());
        let (train, val) = split(&ids, |s| s, &SplitSpec { val_fraction: 0.3, seed: 3 }).unwrap();
        assert_eq!(train.len() + val.len(), 50);
    }
}
