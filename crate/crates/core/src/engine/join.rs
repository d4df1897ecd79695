//! Equi-joins of two relations: typed keys, cardinality estimation, and an
//! in-memory or partitioned external hash join.

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cache::JoinStats;
use super::rowstore::{RowStore, SpillWriter, StoredRelation};
use crate::error::{Error, Result};
use crate::hash::{hash64, SAMPLE_SEED};
use crate::index::JoinEdge;
use crate::table::{row_bytes, ColumnRef, Row};
use crate::text::{canonical, ValueType};

/// How join keys compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyMode {
    Text,
    Numeric,
}

/// Numeric columns join numerically, text columns by normalized string.
/// Mixing the two is an error.
pub fn key_mode(left: &ColumnRef, left_ty: ValueType, right: &ColumnRef, right_ty: ValueType) -> Result<KeyMode> {
    match (left_ty.is_numeric(), right_ty.is_numeric()) {
        (true, true) => Ok(KeyMode::Numeric),
        (false, false) => Ok(KeyMode::Text),
        _ => Err(Error::TypeMismatch {
            left: left.clone(),
            left_type: left_ty.as_str(),
            right: right.clone(),
            right_type: right_ty.as_str(),
        }),
    }
}

/// The comparable key of a cell; nulls have none.
pub fn join_key(cell: &str, mode: KeyMode) -> Option<Cow<'_, str>> {
    if cell.is_empty() {
        return None;
    }
    match mode {
        KeyMode::Text => Some(Cow::Borrowed(cell)),
        KeyMode::Numeric => Some(Cow::Owned(canonical(cell, ValueType::Real))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinSpec {
    pub left: ColumnRef,
    pub right: ColumnRef,
    pub mode: KeyMode,
}

impl JoinSpec {
    pub fn edge(&self) -> JoinEdge {
        JoinEdge::new(self.left.clone(), self.right.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Bytes a single join may hold in memory.
    pub memory_budget: usize,
    /// Distinct join keys kept per join in sample mode.
    pub sample_k: usize,
    /// Keep rows matching value constraints (and their join partners) in samples.
    pub include_value_rows: bool,
    /// Left-side fraction joined when estimating output size.
    pub estimate_fraction: f64,
    pub partitions: usize,
    pub max_recursion: u32,
    pub table_cache_bytes: usize,
    /// Where spill files go; the system temp dir when unset.
    pub spill_dir: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            memory_budget: 512 << 20,
            sample_k: 1000,
            include_value_rows: false,
            estimate_fraction: 0.1,
            partitions: 64,
            max_recursion: 2,
            table_cache_bytes: super::cache::DEFAULT_TABLE_CACHE_BYTES,
            spill_dir: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory_budget == 0 {
            return Err(Error::Config("memory_budget must be positive".into()));
        }
        if self.sample_k == 0 {
            return Err(Error::Config("sample_k must be at least 1".into()));
        }
        if !(self.estimate_fraction > 0.0 && self.estimate_fraction <= 1.0) {
            return Err(Error::Config("estimate_fraction must be in (0, 1]".into()));
        }
        if self.partitions < 2 {
            return Err(Error::Config("partitions must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinEstimate {
    pub rows: f64,
    pub bytes: f64,
}

pub fn scale_estimate(observed: u64, fraction: f64) -> f64 {
    observed as f64 / fraction
}

fn fraction_threshold(fraction: f64) -> u64 {
    if fraction >= 1.0 {
        u64::MAX
    } else {
        (fraction * u64::MAX as f64) as u64
    }
}

/// Join a hash-consistent `fraction` of the left keys against the right side
/// and scale up. Bytes use the mean width of the first 1000 rows per side.
pub fn estimate_join_cardinality(
    left: &StoredRelation,
    right: &StoredRelation,
    spec: &JoinSpec,
    fraction: f64,
) -> Result<JoinEstimate> {
    let lp = position(left, &spec.left)?;
    let rp = position(right, &spec.right)?;
    let mut counts: HashMap<String, u64> = HashMap::new();
    right.rows.for_each(|r| {
        if let Some(k) = join_key(&r[rp], spec.mode) {
            *counts.entry(k.into_owned()).or_default() += 1;
        }
        Ok(())
    })?;
    let tau = fraction_threshold(fraction);
    let mut observed = 0u64;
    left.rows.for_each(|r| {
        if let Some(k) = join_key(&r[lp], spec.mode) {
            if hash64(SAMPLE_SEED, k.as_bytes()) <= tau {
                observed += counts.get(k.as_ref()).copied().unwrap_or(0);
            }
        }
        Ok(())
    })?;
    let rows = scale_estimate(observed, fraction);
    let width = left.rows.mean_row_bytes(1000)? + right.rows.mean_row_bytes(1000)?;
    Ok(JoinEstimate {
        rows,
        bytes: rows * width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinStrategy {
    InMemory,
    External,
}

pub fn choose_strategy(estimated_bytes: f64, budget: usize) -> JoinStrategy {
    if estimated_bytes <= budget as f64 {
        JoinStrategy::InMemory
    } else {
        JoinStrategy::External
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpillStats {
    pub files: usize,
    pub bytes: u64,
    pub max_level: u32,
}

#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub rel: StoredRelation,
    pub strategy: JoinStrategy,
    pub estimate: JoinEstimate,
    pub spill: SpillStats,
}

/// Join two relations, choosing the strategy from an output estimate. The
/// output holds the left columns then the right columns.
pub fn join_two(
    left: &StoredRelation,
    right: &StoredRelation,
    spec: &JoinSpec,
    cfg: &EngineConfig,
    stats: Option<&JoinStats>,
) -> Result<JoinOutcome> {
    let fraction = if left.len() <= 1000 { 1.0 } else { cfg.estimate_fraction };
    let estimate = estimate_join_cardinality(left, right, spec, fraction)?;
    let strategy = choose_strategy(estimate.bytes, cfg.memory_budget);
    let (rel, spill) = join_with(left, right, spec, strategy, cfg)?;
    if let Some(s) = stats {
        s.record(&spec.edge(), rel.len() as u64);
    }
    Ok(JoinOutcome {
        rel,
        strategy,
        estimate,
        spill,
    })
}

/// Join with a fixed strategy.
pub fn join_with(
    left: &StoredRelation,
    right: &StoredRelation,
    spec: &JoinSpec,
    strategy: JoinStrategy,
    cfg: &EngineConfig,
) -> Result<(StoredRelation, SpillStats)> {
    let lp = position(left, &spec.left)?;
    let rp = position(right, &spec.right)?;
    let mut columns = left.columns.clone();
    columns.extend(right.columns.iter().cloned());
    let mut sink = Sink::new(cfg.memory_budget, cfg.spill_dir.as_deref());
    let mut spill = SpillStats::default();
    match strategy {
        JoinStrategy::InMemory => hash_join(&left.rows, lp, &right.rows, rp, spec.mode, &mut sink)?,
        JoinStrategy::External => {
            let base = cfg.spill_dir.clone().unwrap_or_else(std::env::temp_dir);
            let dir = tempfile::Builder::new()
                .prefix("viewdisc-join-")
                .tempdir_in(&base)
                .map_err(|e| Error::Spill(format!("{}: {e}", base.display())))?;
            let mut g = Grace {
                cfg,
                mode: spec.mode,
                stats: &mut spill,
                sink: &mut sink,
            };
            g.join(&left.rows, lp, &right.rows, rp, 0, dir.path())?;
            dir.close()
                .map_err(|e| Error::Spill(format!("cleanup: {e}")))?;
        }
    }
    let rows = sink.finish()?;
    Ok((StoredRelation { columns, rows }, spill))
}

fn position(rel: &StoredRelation, col: &ColumnRef) -> Result<usize> {
    rel.position(col).ok_or_else(|| Error::UnknownColumn(col.clone()))
}

fn concat(l: &Row, r: &Row) -> Row {
    let mut out = Vec::with_capacity(l.len() + r.len());
    out.extend(l.iter().cloned());
    out.extend(r.iter().cloned());
    out
}

/// Build on the right, probe with the left in order.
fn hash_join(left: &RowStore, lp: usize, right: &RowStore, rp: usize, mode: KeyMode, sink: &mut Sink) -> Result<()> {
    let right_rows = right.resident()?;
    let mut table: HashMap<Cow<'_, str>, Vec<usize>> = HashMap::new();
    for (i, r) in right_rows.iter().enumerate() {
        if let Some(k) = join_key(&r[rp], mode) {
            table.entry(k).or_default().push(i);
        }
    }
    if table.is_empty() {
        return Ok(());
    }
    left.for_each(|l| {
        if let Some(k) = join_key(&l[lp], mode) {
            if let Some(matches) = table.get(k.as_ref()) {
                for &i in matches {
                    sink.push(concat(l, &right_rows[i]))?;
                }
            }
        }
        Ok(())
    })
}

/// Output buffer that moves to a spill file once it outgrows the budget.
struct Sink<'a> {
    rows: Vec<Row>,
    bytes: usize,
    budget: usize,
    dir: Option<&'a Path>,
    spill: Option<SpillWriter>,
}

impl<'a> Sink<'a> {
    fn new(budget: usize, dir: Option<&'a Path>) -> Self {
        Sink {
            rows: Vec::new(),
            bytes: 0,
            budget,
            dir,
            spill: None,
        }
    }

    fn push(&mut self, row: Row) -> Result<()> {
        if let Some(w) = &mut self.spill {
            return w.write_row(&row);
        }
        self.bytes += row_bytes(&row);
        self.rows.push(row);
        if self.bytes > self.budget {
            let mut w = SpillWriter::temp_in(self.dir)?;
            for r in self.rows.drain(..) {
                w.write_row(&r)?;
            }
            self.spill = Some(w);
        }
        Ok(())
    }

    fn finish(self) -> Result<RowStore> {
        match self.spill {
            Some(w) => w.into_store(),
            None => Ok(RowStore::from_rows(self.rows)),
        }
    }
}

struct Grace<'a, 'b> {
    cfg: &'a EngineConfig,
    mode: KeyMode,
    stats: &'a mut SpillStats,
    sink: &'a mut Sink<'b>,
}

impl Grace<'_, '_> {
    fn join(&mut self, left: &RowStore, lp: usize, right: &RowStore, rp: usize, level: u32, dir: &Path) -> Result<()> {
        self.stats.max_level = self.stats.max_level.max(level);
        let seed = SAMPLE_SEED ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(level as u64 + 1));
        let lparts = self.partition(left, lp, seed, &dir.join(format!("l{level}")))?;
        let rparts = self.partition(right, rp, seed, &dir.join(format!("r{level}")))?;
        for (p, (l, r)) in lparts.into_iter().zip(rparts).enumerate() {
            let (Some((l, _)), Some((r, rbytes))) = (l, r) else {
                continue;
            };
            if rbytes > self.cfg.memory_budget as u64 && level < self.cfg.max_recursion {
                let sub = dir.join(format!("p{level}_{p}"));
                std::fs::create_dir(&sub).map_err(|e| Error::Spill(format!("{}: {e}", sub.display())))?;
                self.join(&l, lp, &r, rp, level + 1, &sub)?;
            } else {
                hash_join(&l, lp, &r, rp, self.mode, self.sink)?;
            }
        }
        Ok(())
    }

    /// Hash-partition rows with a non-null key into spill files.
    #[allow(clippy::type_complexity)]
    fn partition(
        &mut self,
        rows: &RowStore,
        pos: usize,
        seed: u64,
        dir: &Path,
    ) -> Result<Vec<Option<(RowStore, u64)>>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Spill(format!("{}: {e}", dir.display())))?;
        let n = self.cfg.partitions;
        let mut writers: Vec<Option<SpillWriter>> = (0..n).map(|_| None).collect();
        let mode = self.mode;
        rows.for_each(|r| {
            let Some(k) = join_key(&r[pos], mode) else {
                return Ok(());
            };
            let p = (hash64(seed, k.as_bytes()) % n as u64) as usize;
            if writers[p].is_none() {
                writers[p] = Some(SpillWriter::create(dir.join(format!("{p}.bin")))?);
            }
            writers[p].as_mut().unwrap().write_row(r)
        })?;
        let mut out = Vec::with_capacity(n);
        for w in writers {
            match w {
                Some(w) => {
                    let bytes = w.bytes_written();
                    self.stats.files += 1;
                    self.stats.bytes += bytes;
                    out.push(Some((w.into_store()?, bytes)));
                }
                None => out.push(None),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::TableId;

    fn rel(t: u32, cols: &[&str], rows: &[&[&str]]) -> StoredRelation {
        StoredRelation::new(
            cols.iter().map(|c| ColumnRef::new(TableId(t), *c)).collect(),
            rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        )
    }

    fn spec(mode: KeyMode) -> JoinSpec {
        JoinSpec {
            left: ColumnRef::new(TableId(0), "k"),
            right: ColumnRef::new(TableId(1), "k"),
            mode,
        }
    }

    #[test]
    fn mismatched_types_are_rejected() {
        let a = ColumnRef::new(TableId(0), "k");
        let b = ColumnRef::new(TableId(1), "k");
        assert!(matches!(
            key_mode(&a, ValueType::Integer, &b, ValueType::Text),
            Err(Error::TypeMismatch { .. })
        ));
        assert_eq!(key_mode(&a, ValueType::Integer, &b, ValueType::Real).unwrap(), KeyMode::Numeric);
    }

    #[test]
    fn numeric_keys_compare_by_value_and_nulls_never_match() {
        let l = rel(0, &["k", "a"], &[&["7", "x"], &["", "null"], &["8", "y"]]);
        let r = rel(1, &["k", "b"], &[&["007", "p"], &["7.0", "q"], &["", "z"]]);
        let (out, _) = join_with(&l, &r, &spec(KeyMode::Numeric), JoinStrategy::InMemory, &EngineConfig::default()).unwrap();
        let rows = out.rows.to_vec().unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r[1] == "x"));
        let (text, _) = join_with(&l, &r, &spec(KeyMode::Text), JoinStrategy::InMemory, &EngineConfig::default()).unwrap();
        assert!(text.is_empty());
    }

    #[test]
    fn strategies_agree_and_external_spills() {
        let lrows: Vec<Vec<String>> = (0..3000).map(|i| vec![(i % 500).to_string(), format!("l{i}")]).collect();
        let rrows: Vec<Vec<String>> = (0..2000).map(|i| vec![(i % 700).to_string(), format!("r{i}")]).collect();
        let l = StoredRelation::new(vec![ColumnRef::new(TableId(0), "k"), ColumnRef::new(TableId(0), "a")], lrows);
        let r = StoredRelation::new(vec![ColumnRef::new(TableId(1), "k"), ColumnRef::new(TableId(1), "b")], rrows);
        let cfg = EngineConfig {
            memory_budget: 256,
            ..EngineConfig::default()
        };
        let s = spec(KeyMode::Numeric);
        let (a, s1) = join_with(&l, &r, &s, JoinStrategy::InMemory, &EngineConfig::default()).unwrap();
        let (b, s2) = join_with(&l, &r, &s, JoinStrategy::External, &cfg).unwrap();
        assert_eq!(s1.files, 0);
        assert!(s2.files > 0 && s2.bytes > 0);
        assert!(s2.max_level >= 1, "tiny budget should recurse");
        assert!(b.rows.is_spilled());
        let mut x = a.rows.to_vec().unwrap();
        let mut y = b.rows.to_vec().unwrap();
        x.sort();
        y.sort();
        // left keys 0..500 appear 6 times, each matching 3 right rows
        assert_eq!(x.len(), 500 * 6 * 3);
        assert_eq!(x, y);
    }

    #[test]
    fn strategy_threshold() {
        assert_eq!(choose_strategy(2.0 * 100.0, 100), JoinStrategy::External);
        assert_eq!(choose_strategy(100.0, 100), JoinStrategy::InMemory);
    }

    #[test]
    fn absent_key_gives_empty_output_and_zero_logged() {
        let l = rel(0, &["k"], &[&["a"], &["b"]]);
        let r = rel(1, &["k"], &[&["c"]]);
        let stats = JoinStats::default();
        let out = join_two(&l, &r, &spec(KeyMode::Text), &EngineConfig::default(), Some(&stats)).unwrap();
        assert!(out.rel.is_empty());
        assert_eq!(stats.get(&spec(KeyMode::Text).edge()), Some(0));
        assert_eq!(out.estimate.rows, 0.0);
    }

    #[test]
    fn estimate_scales_linearly() {
        assert_eq!(scale_estimate(12, 0.1), 120.0);
        assert_eq!(scale_estimate(0, 0.1), 0.0);
    }
}
