//! Executing join graphs: materialization and the materializability check.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cache::{EngineCaches, JoinStats};
use super::join::{join_key, join_two, key_mode, EngineConfig, JoinSpec, JoinStrategy, KeyMode};
use super::rowstore::{RowStore, SpillWriter, StoredRelation};
use super::sample::{filter_by_threshold, sample_threshold};
use crate::error::{Error, Result};
use crate::index::{DiscoveryIndex, JoinEdge};
use crate::search::{ConstraintSet, JoinGraph, ValueConstraint};
use crate::table::{ColumnRef, Row, TableId};
use crate::text::value_matches;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "k")]
pub enum MaterializeMode {
    Full,
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinRecord {
    pub edge: JoinEdge,
    pub left_rows: u64,
    pub right_rows: u64,
    pub output_rows: u64,
    pub estimated_rows: f64,
    pub strategy: JoinStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub graph: JoinGraph,
    pub joins: Vec<JoinRecord>,
    pub sampled: bool,
}

/// A materialized join graph projected to the query attributes.
#[derive(Debug, Clone)]
pub struct CandidateView {
    pub view_id: String,
    pub schema: Vec<String>,
    pub rows: RowStore,
    pub provenance: Provenance,
    pub sampled: bool,
    pub fulfilled: ConstraintSet,
}

impl CandidateView {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv {
            path: format!("<view {}>", self.view_id).into(),
            message: e.to_string(),
        };
        w.write_record(&self.schema).map_err(csv_err)?;
        self.rows.for_each(|r| w.write_record(r).map_err(csv_err))?;
        w.flush().map_err(|e| Error::io(format!("<view {}>", self.view_id), e))
    }

    pub fn provenance_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.provenance)?)
    }

    /// Write `<view_id>.csv` and `<view_id>.provenance.json` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{}.csv", self.view_id));
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let side = dir.join(format!("{}.provenance.json", self.view_id));
        std::fs::write(&side, self.provenance_json()? + "\n").map_err(|e| Error::io(&side, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Materializability {
    pub materializable: bool,
    /// Output rows carrying at least one value constraint (capped).
    pub witness: Vec<Row>,
    /// Set when a cached dead end rejected the graph before execution.
    pub cached_dead_end: Option<JoinEdge>,
    /// Set when this check found a new dead end.
    pub new_dead_end: Option<JoinEdge>,
}

const MAX_WITNESS_ROWS: usize = 20;

/// Index, caches, stats and config bundled for execution.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub index: &'a DiscoveryIndex,
    pub caches: &'a EngineCaches,
    pub stats: &'a JoinStats,
    pub config: &'a EngineConfig,
}

/// Value filters per column, pushed below the joins.
type Predicates = BTreeMap<ColumnRef, Vec<String>>;

fn predicates_for(graph: &JoinGraph, constraints: &BTreeSet<ValueConstraint>) -> Predicates {
    let mut out: Predicates = BTreeMap::new();
    for vc in constraints {
        if let Some((_, col)) = graph.projection.iter().find(|(a, _)| *a == vc.attribute) {
            out.entry(col.clone()).or_default().push(vc.value.clone());
        }
    }
    out
}

/// Canonical text of the predicates touching an edge's two tables.
fn edge_signature(edge: &JoinEdge, preds: &Predicates) -> String {
    let mut parts = Vec::new();
    for (col, values) in preds {
        if col.table == edge.left.table || col.table == edge.right.table {
            let mut vs = values.clone();
            vs.sort();
            parts.push(format!("{col}={}", vs.join("|")));
        }
    }
    parts.join(";")
}

impl<'a> Engine<'a> {
    pub fn new(index: &'a DiscoveryIndex, caches: &'a EngineCaches, stats: &'a JoinStats, config: &'a EngineConfig) -> Self {
        Engine {
            index,
            caches,
            stats,
            config,
        }
    }

    fn spec_for(&self, from: &ColumnRef, to: &ColumnRef) -> Result<JoinSpec> {
        let mode = key_mode(from, self.index.column_type(from), to, self.index.column_type(to))?;
        Ok(JoinSpec {
            left: from.clone(),
            right: to.clone(),
            mode,
        })
    }

    fn load(&self, table: TableId, preds: &Predicates) -> Result<StoredRelation> {
        let rel = self.caches.tables.get_or_load(self.index, table)?;
        let filters: Vec<(usize, &Vec<String>)> = preds
            .iter()
            .filter(|(c, _)| c.table == table)
            .map(|(c, v)| rel.position(c).map(|p| (p, v)).ok_or_else(|| Error::UnknownColumn(c.clone())))
            .collect::<Result<_>>()?;
        if filters.is_empty() {
            return Ok(rel);
        }
        let mut rows = Vec::new();
        rel.rows.for_each(|r| {
            // OR across columns: a superset of every tuple's matches.
            if filters
                .iter()
                .any(|(p, vals)| vals.iter().any(|v| value_matches(&r[*p], v)))
            {
                rows.push(r.clone());
            }
            Ok(())
        })?;
        Ok(StoredRelation::new(rel.columns, rows))
    }

    /// Materialize a connected join graph, joining from leaves inward.
    pub fn materialize_join_graph(&self, graph: &JoinGraph, mode: MaterializeMode) -> Result<CandidateView> {
        let run = self.execute(graph, mode, &Predicates::new())?;
        let rows = project(&run.rel, graph, self.config.spill_dir.as_deref())?;
        let sampled = run.sampled;
        Ok(CandidateView {
            view_id: graph.view_id(),
            schema: graph.projection.iter().map(|(a, _)| a.clone()).collect(),
            rows,
            provenance: Provenance {
                graph: graph.clone(),
                joins: run.joins,
                sampled,
            },
            sampled,
            fulfilled: graph.fulfilled.clone(),
        })
    }

    /// Does the graph's output contain its value constraints? Predicates are
    /// pushed into the base tables; an empty join is confirmed on the base
    /// pair before it enters the dead-end cache.
    pub fn check_materializable(&self, graph: &JoinGraph) -> Result<Materializability> {
        let constraints = &graph.fulfilled.value_hits;
        let preds = predicates_for(graph, constraints);
        for e in &graph.edges {
            if self.caches.is_dead_end(e, &edge_signature(e, &preds)) {
                return Ok(Materializability {
                    materializable: false,
                    witness: vec![],
                    cached_dead_end: Some(e.clone()),
                    new_dead_end: None,
                });
            }
        }
        let run = self.execute(graph, MaterializeMode::Full, &preds)?;
        if let Some(edge) = run.empty_at {
            let mut new_dead_end = None;
            if self.base_pair_empty(&edge, &preds)? {
                self.caches.add_dead_end(&edge, &edge_signature(&edge, &preds));
                new_dead_end = Some(edge);
            }
            return Ok(Materializability {
                materializable: false,
                witness: vec![],
                cached_dead_end: None,
                new_dead_end,
            });
        }
        let rows = project(&run.rel, graph, self.config.spill_dir.as_deref())?;
        let schema: Vec<&String> = graph.projection.iter().map(|(a, _)| a).collect();
        let cons: Vec<(usize, &ValueConstraint)> = constraints
            .iter()
            .filter_map(|vc| schema.iter().position(|a| **a == vc.attribute).map(|p| (p, vc)))
            .collect();
        let mut seen = vec![false; cons.len()];
        let mut witness = Vec::new();
        let mut any = false;
        rows.for_each(|r| {
            any = true;
            let mut hit = false;
            for (i, (p, vc)) in cons.iter().enumerate() {
                if value_matches(&r[*p], &vc.value) {
                    seen[i] = true;
                    hit = true;
                }
            }
            if (hit || cons.is_empty()) && witness.len() < MAX_WITNESS_ROWS {
                witness.push(r.clone());
            }
            Ok(())
        })?;
        Ok(Materializability {
            materializable: any && seen.iter().all(|s| *s),
            witness,
            cached_dead_end: None,
            new_dead_end: None,
        })
    }

    fn base_pair_empty(&self, edge: &JoinEdge, preds: &Predicates) -> Result<bool> {
        let l = self.load(edge.left.table, preds)?;
        let r = self.load(edge.right.table, preds)?;
        let spec = self.spec_for(&edge.left, &edge.right)?;
        Ok(join_two(&l, &r, &spec, self.config, None)?.rel.is_empty())
    }

    fn execute(&self, graph: &JoinGraph, mode: MaterializeMode, preds: &Predicates) -> Result<Execution> {
        if !graph.is_connected() {
            return Err(Error::Config(format!("join graph {} is not connected", graph.view_id())));
        }
        let mut rels: BTreeMap<TableId, StoredRelation> = BTreeMap::new();
        for t in &graph.nodes {
            rels.insert(*t, self.load(*t, preds)?);
        }
        // Each original table maps to the node that now holds its columns.
        let mut holder: BTreeMap<TableId, TableId> = graph.nodes.iter().map(|t| (*t, *t)).collect();
        let mut remaining: Vec<JoinEdge> = graph.edges.iter().cloned().collect();
        let mut joins = Vec::new();
        let mut sampled = false;
        let value_cols: Predicates = if self.config.include_value_rows {
            predicates_for(graph, &graph.fulfilled.value_hits)
        } else {
            Predicates::new()
        };

        while !remaining.is_empty() {
            let (idx, leaf) = self.next_join(&remaining, &holder);
            let edge = remaining.remove(idx);
            let inner = if holder[&edge.left.table] == leaf {
                holder[&edge.right.table]
            } else {
                holder[&edge.left.table]
            };
            let (leaf_col, inner_col) = if holder[&edge.left.table] == leaf {
                (&edge.left, &edge.right)
            } else {
                (&edge.right, &edge.left)
            };
            let spec = self.spec_for(leaf_col, inner_col)?;
            let mut l = rels.remove(&leaf).unwrap();
            let mut r = rels.remove(&inner).unwrap();
            if let MaterializeMode::Sample(k) = mode {
                let (sl, sr, did) = self.sample_pair(&l, &r, &spec, k, &value_cols)?;
                l = sl;
                r = sr;
                sampled |= did;
            }
            let out = join_two(&l, &r, &spec, self.config, Some(self.stats))?;
            joins.push(JoinRecord {
                edge: edge.clone(),
                left_rows: l.len() as u64,
                right_rows: r.len() as u64,
                output_rows: out.rel.len() as u64,
                estimated_rows: out.estimate.rows,
                strategy: out.strategy,
            });
            for h in holder.values_mut() {
                if *h == leaf {
                    *h = inner;
                }
            }
            let empty = out.rel.is_empty();
            rels.insert(inner, out.rel);
            if empty {
                // Later joins cannot add rows.
                return Ok(Execution {
                    rel: StoredRelation::default(),
                    joins,
                    sampled,
                    empty_at: Some(edge),
                });
            }
        }
        let rel = rels.into_values().next().unwrap_or_default();
        Ok(Execution {
            rel,
            joins,
            sampled,
            empty_at: None,
        })
    }

    /// Pick the next edge: one touching a leaf of the contracted graph. When
    /// stats know some candidates, the smallest observed one goes first.
    fn next_join(&self, remaining: &[JoinEdge], holder: &BTreeMap<TableId, TableId>) -> (usize, TableId) {
        let mut degree: BTreeMap<TableId, usize> = BTreeMap::new();
        for e in remaining {
            *degree.entry(holder[&e.left.table]).or_default() += 1;
            *degree.entry(holder[&e.right.table]).or_default() += 1;
        }
        let mut candidates: Vec<(usize, TableId)> = Vec::new();
        for (i, e) in remaining.iter().enumerate() {
            let (a, b) = (holder[&e.left.table], holder[&e.right.table]);
            if degree[&a] == 1 {
                candidates.push((i, a));
            } else if degree[&b] == 1 {
                candidates.push((i, b));
            }
        }
        let known = candidates
            .iter()
            .filter_map(|c| self.stats.get(&remaining[c.0]).map(|n| (n, *c)))
            .min_by_key(|(n, c)| (*n, c.0));
        match known {
            Some((_, c)) => c,
            None => candidates[0],
        }
    }

    /// Sample both sides with the threshold of the side holding more keys.
    fn sample_pair(
        &self,
        l: &StoredRelation,
        r: &StoredRelation,
        spec: &JoinSpec,
        k: usize,
        value_cols: &Predicates,
    ) -> Result<(StoredRelation, StoredRelation, bool)> {
        let (big, big_col) = if l.len() >= r.len() { (l, &spec.left) } else { (r, &spec.right) };
        let tau = sample_threshold(big, big_col, spec.mode, k)?;
        if tau.is_none() {
            return Ok((l.clone(), r.clone(), false));
        }
        let mut extra = HashSet::new();
        if !value_cols.is_empty() {
            forced_keys(l, &spec.left, spec.mode, value_cols, &mut extra)?;
            forced_keys(r, &spec.right, spec.mode, value_cols, &mut extra)?;
        }
        let sl = filter_by_threshold(l, &spec.left, spec.mode, tau, &extra)?;
        let sr = filter_by_threshold(r, &spec.right, spec.mode, tau, &extra)?;
        Ok((sl, sr, true))
    }
}

/// Join keys of rows matching a value constraint, so samples keep them.
fn forced_keys(
    rel: &StoredRelation,
    key_col: &ColumnRef,
    mode: KeyMode,
    value_cols: &Predicates,
    out: &mut HashSet<String>,
) -> Result<()> {
    let kp = rel
        .position(key_col)
        .ok_or_else(|| Error::UnknownColumn(key_col.clone()))?;
    let checks: Vec<(usize, &Vec<String>)> = value_cols
        .iter()
        .filter_map(|(c, v)| rel.position(c).map(|p| (p, v)))
        .collect();
    if checks.is_empty() {
        return Ok(());
    }
    rel.rows.for_each(|r| {
        if checks.iter().any(|(p, vs)| vs.iter().any(|v| value_matches(&r[*p], v))) {
            if let Some(k) = join_key(&r[kp], mode) {
                out.insert(k.into_owned());
            }
        }
        Ok(())
    })
}

struct Execution {
    rel: StoredRelation,
    joins: Vec<JoinRecord>,
    sampled: bool,
    empty_at: Option<JoinEdge>,
}

fn project(rel: &StoredRelation, graph: &JoinGraph, spill_dir: Option<&Path>) -> Result<RowStore> {
    if rel.is_empty() {
        return Ok(RowStore::default());
    }
    let positions: Vec<usize> = graph
        .projection
        .iter()
        .map(|(_, c)| rel.position(c).ok_or_else(|| Error::UnknownColumn(c.clone())))
        .collect::<Result<_>>()?;
    let pick = |r: &Row| -> Row { positions.iter().map(|p| r[*p].clone()).collect() };
    if rel.rows.is_spilled() {
        let mut w = SpillWriter::temp_in(spill_dir)?;
        rel.rows.for_each(|r| w.write_row(&pick(r)))?;
        return w.into_store();
    }
    let mut rows = Vec::with_capacity(rel.len());
    rel.rows.for_each(|r| {
        rows.push(pick(r));
        Ok(())
    })?;
    Ok(RowStore::from_rows(rows))
}

