//! Consistent (hash-rank) sampling of join inputs.
//!
//! A key survives when its seeded 64-bit hash is among the K smallest
//! distinct key hashes. The hash depends only on the key text, so every table
//! holding the same key makes the same decision.

use std::collections::HashSet;

use super::join::{join_key, KeyMode};
use super::rowstore::StoredRelation;
use crate::error::{Error, Result};
use crate::hash::{hash64, SAMPLE_SEED};
use crate::table::ColumnRef;

pub fn key_hash(key: &str) -> u64 {
    hash64(SAMPLE_SEED, key.as_bytes())
}

/// Hash of the K-th smallest distinct key, or `None` when there are at most
/// K distinct keys (nothing to drop).
pub fn sample_threshold(rel: &StoredRelation, column: &ColumnRef, mode: KeyMode, k: usize) -> Result<Option<u64>> {
    let pos = rel
        .position(column)
        .ok_or_else(|| Error::UnknownColumn(column.clone()))?;
    let mut hashes: HashSet<u64> = HashSet::new();
    rel.rows.for_each(|r| {
        if let Some(key) = join_key(&r[pos], mode) {
            hashes.insert(key_hash(&key));
        }
        Ok(())
    })?;
    if hashes.len() <= k || k == 0 {
        return Ok(if k == 0 { Some(0) } else { None });
    }
    let mut v: Vec<u64> = hashes.into_iter().collect();
    let (_, kth, _) = v.select_nth_unstable(k - 1);
    Ok(Some(*kth))
}

/// Rows whose key hash is at most `tau`, plus rows whose key is in `extra`.
/// Null keys never survive a threshold.
pub fn filter_by_threshold(
    rel: &StoredRelation,
    column: &ColumnRef,
    mode: KeyMode,
    tau: Option<u64>,
    extra: &HashSet<String>,
) -> Result<StoredRelation> {
    let Some(tau) = tau else {
        return Ok(rel.clone());
    };
    let pos = rel
        .position(column)
        .ok_or_else(|| Error::UnknownColumn(column.clone()))?;
    let mut rows = Vec::new();
    rel.rows.for_each(|r| {
        if let Some(key) = join_key(&r[pos], mode) {
            if key_hash(&key) <= tau || extra.contains(key.as_ref()) {
                rows.push(r.clone());
            }
        }
        Ok(())
    })?;
    Ok(StoredRelation::new(rel.columns.clone(), rows))
}

/// Rows whose key hash ranks among the `k` smallest distinct key hashes.
pub fn consistent_sample(rel: &StoredRelation, column: &ColumnRef, mode: KeyMode, k: usize) -> Result<StoredRelation> {
    let tau = sample_threshold(rel, column, mode, k)?;
    filter_by_threshold(rel, column, mode, tau, &HashSet::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::TableId;

    fn rel(t: u32, keys: impl IntoIterator<Item = String>) -> StoredRelation {
        StoredRelation::new(
            vec![ColumnRef::new(TableId(t), "k")],
            keys.into_iter().map(|k| vec![k]).collect(),
        )
    }

    fn keys(r: &StoredRelation) -> HashSet<String> {
        r.rows.to_vec().unwrap().into_iter().map(|r| r[0].clone()).collect()
    }

    #[test]
    fn copies_select_identical_keys() {
        let data: Vec<String> = (0..200).map(|i| format!("k{i}")).collect();
        let a = rel(0, data.clone());
        let b = rel(1, data.into_iter().rev());
        let sa = consistent_sample(&a, &ColumnRef::new(TableId(0), "k"), KeyMode::Text, 20).unwrap();
        let sb = consistent_sample(&b, &ColumnRef::new(TableId(1), "k"), KeyMode::Text, 20).unwrap();
        assert_eq!(keys(&sa), keys(&sb));
        assert_eq!(sa.len(), 20);
    }

    #[test]
    fn small_tables_are_kept_whole() {
        let a = rel(0, (0..5).map(|i| i.to_string()).chain(["".to_string()]));
        let s = consistent_sample(&a, &ColumnRef::new(TableId(0), "k"), KeyMode::Numeric, 10).unwrap();
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn duplicates_count_once() {
        let a = rel(0, (0..100).flat_map(|i| [format!("{i}"), format!("{i}")]));
        let s = consistent_sample(&a, &ColumnRef::new(TableId(0), "k"), KeyMode::Text, 10).unwrap();
        assert_eq!(keys(&s).len(), 10);
        assert_eq!(s.len(), 20);
    }
}
