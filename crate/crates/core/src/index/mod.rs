//! Discovery index: table catalog, column profiles, inclusion dependencies,
//! and the attribute/value search structures used by view search.

mod ind;
mod paths;
mod persist;
mod profile;
mod sketch;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ind::{exact_containment, find_inclusion_dependencies, InclusionDependency, IndThresholds, ValueSets};
pub use paths::{JoinEdge, JoinEdgeGraph, JoinHop, JoinPath};
pub use persist::{CATALOG_FILE, FORMAT_VERSION, VALUES_FILE};
pub use profile::{distinct_values, profile_column, ColumnProfile};
pub use sketch::{MinHashSketch, SKETCH_SLOTS};

use crate::error::{Error, Result};
use crate::hash::SKETCH_SEED;
use crate::table::{read_csv, unique_column_names, ColumnRef, Table, TableId};
use crate::text::{normalize_attribute, normalize_cell, tokens, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub thresholds: IndThresholds,
    pub sketch_seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            thresholds: IndThresholds::default(),
            sketch_seed: SKETCH_SEED,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        for (name, v) in [("containment", t.containment), ("uniqueness", t.uniqueness)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::Config(format!("{name} threshold {v} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct DiscoveryIndex {
    pub corpus_root: PathBuf,
    pub config: IndexConfig,
    pub tables: Vec<Table>,
    pub profiles: Vec<ColumnProfile>,
    pub ind_edges: Vec<InclusionDependency>,
    /// Normalized column name to every column carrying it.
    pub attribute_index: BTreeMap<String, Vec<ColumnRef>>,
    /// Lowercased normalized cell text to the textual columns containing it.
    pub value_index: BTreeMap<String, BTreeSet<ColumnRef>>,
    value_keys: Vec<String>,
    token_index: HashMap<String, Vec<usize>>,
    join_graph: JoinEdgeGraph,
    profile_pos: HashMap<ColumnRef, usize>,
}

impl DiscoveryIndex {
    pub(crate) fn assemble(
        corpus_root: PathBuf,
        config: IndexConfig,
        tables: Vec<Table>,
        profiles: Vec<ColumnProfile>,
        ind_edges: Vec<InclusionDependency>,
        value_index: BTreeMap<String, BTreeSet<ColumnRef>>,
    ) -> Self {
        let mut attribute_index: BTreeMap<String, Vec<ColumnRef>> = BTreeMap::new();
        for t in &tables {
            for c in &t.columns {
                attribute_index
                    .entry(c.clone())
                    .or_default()
                    .push(ColumnRef::new(t.id, c.clone()));
            }
        }
        let value_keys: Vec<String> = value_index.keys().cloned().collect();
        let mut token_index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, v) in value_keys.iter().enumerate() {
            let mut toks = tokens(v);
            toks.sort();
            toks.dedup();
            for t in toks {
                token_index.entry(t).or_default().push(i);
            }
        }
        let join_graph = JoinEdgeGraph::from_inds(&ind_edges);
        let profile_pos = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| (p.column_ref.clone(), i))
            .collect();
        DiscoveryIndex {
            corpus_root,
            config,
            tables,
            profiles,
            ind_edges,
            attribute_index,
            value_index,
            value_keys,
            token_index,
            join_graph,
            profile_pos,
        }
    }

    pub fn table(&self, id: TableId) -> Result<&Table> {
        self.tables
            .get(id.0 as usize)
            .filter(|t| t.id == id)
            .or_else(|| self.tables.iter().find(|t| t.id == id))
            .ok_or(Error::UnknownTable(id))
    }

    pub fn table_by_name(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn profile(&self, column: &ColumnRef) -> Option<&ColumnProfile> {
        self.profile_pos.get(column).map(|&i| &self.profiles[i])
    }

    pub fn column_type(&self, column: &ColumnRef) -> ValueType {
        self.profile(column)
            .map(|p| p.inferred_type)
            .unwrap_or(ValueType::Text)
    }

    pub fn join_graph(&self) -> &JoinEdgeGraph {
        &self.join_graph
    }

    /// Columns whose normalized name equals the normalized query name.
    pub fn search_attribute(&self, name: &str) -> Vec<ColumnRef> {
        self.attribute_index
            .get(&normalize_attribute(name))
            .cloned()
            .unwrap_or_default()
    }

    /// Attribute names starting with `prefix`, for autocompletion.
    pub fn complete_attribute(&self, prefix: &str) -> Vec<String> {
        let p = normalize_attribute(prefix);
        self.attribute_index
            .range(p.clone()..)
            .take_while(|(k, _)| k.starts_with(&p))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Textual columns holding a cell equal to `value`, or a cell containing
    /// every token of `value`.
    pub fn search_value(&self, value: &str) -> Vec<ColumnRef> {
        let needle = normalize_cell(value).to_lowercase();
        if needle.is_empty() {
            return Vec::new();
        }
        let mut out: BTreeSet<ColumnRef> = self
            .value_index
            .get(&needle)
            .cloned()
            .unwrap_or_default();
        let mut toks = tokens(&needle);
        toks.sort();
        toks.dedup();
        if !toks.is_empty() {
            let mut postings: Vec<&Vec<usize>> = Vec::with_capacity(toks.len());
            for t in &toks {
                match self.token_index.get(t) {
                    Some(p) => postings.push(p),
                    None => return out.into_iter().collect(),
                }
            }
            postings.sort_by_key(|p| p.len());
            let (first, rest) = postings.split_first().expect("non-empty");
            for &vi in first.iter() {
                if rest.iter().all(|p| p.binary_search(&vi).is_ok()) {
                    if let Some(cols) = self.value_index.get(&self.value_keys[vi]) {
                        out.extend(cols.iter().cloned());
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn join_paths(&self, a: TableId, b: TableId, max_hops: usize) -> Vec<JoinPath> {
        self.join_graph.join_paths(a, b, max_hops)
    }
}

struct IngestedTable {
    table: Table,
    profiles: Vec<ColumnProfile>,
    sets: Vec<HashSet<String>>,
    text_values: Vec<(usize, BTreeSet<String>)>,
}

fn list_csv_files(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn ingest(root: &Path, path: &Path, seed: u64) -> Result<IngestedTable> {
    let data = read_csv(path)?;
    let columns = unique_column_names(&data.header);
    let source_path = relative(root, path);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source_path.clone());
    let mut profiles = Vec::with_capacity(columns.len());
    let mut sets = Vec::with_capacity(columns.len());
    let mut text_values = Vec::new();
    for (ci, col) in columns.iter().enumerate() {
        let values: Vec<&str> = data.rows.iter().map(|r| r[ci].as_str()).collect();
        // Table id is patched in once ids are assigned.
        let (p, s) = profile_column(ColumnRef::new(TableId(u32::MAX), col.clone()), &values, seed);
        if p.inferred_type == ValueType::Text {
            let lowered: BTreeSet<String> = values
                .iter()
                .filter(|v| !v.is_empty())
                .map(|v| v.to_lowercase())
                .collect();
            text_values.push((ci, lowered));
        }
        profiles.push(p);
        sets.push(s);
    }
    Ok(IngestedTable {
        table: Table {
            id: TableId(u32::MAX),
            name,
            source_path,
            columns,
            row_count: data.rows.len() as u64,
        },
        profiles,
        sets,
        text_values,
    })
}

/// Ingest every CSV file under `corpus_dir`. Unreadable files are skipped
/// with a warning; a corpus with no parseable table is an error.
pub fn build_index(corpus_dir: &Path, config: IndexConfig) -> Result<DiscoveryIndex> {
    config.validate()?;
    if !corpus_dir.is_dir() {
        return Err(Error::io(
            corpus_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let root = corpus_dir
        .canonicalize()
        .map_err(|e| Error::io(corpus_dir, e))?;
    let files = list_csv_files(&root)?;
    let ingested: Vec<Option<IngestedTable>> = files
        .par_iter()
        .map(|f| match ingest(&root, f, config.sketch_seed) {
            Ok(t) => Some(t),
            Err(e) => {
                warn!("skipping {}: {e}", f.display());
                None
            }
        })
        .collect();

    let mut tables = Vec::new();
    let mut profiles = Vec::new();
    let mut sets = ValueSets::new();
    let mut value_index: BTreeMap<String, BTreeSet<ColumnRef>> = BTreeMap::new();
    for (i, mut it) in ingested.into_iter().flatten().enumerate() {
        let id = TableId(i as u32);
        it.table.id = id;
        for (mut p, s) in it.profiles.into_iter().zip(it.sets) {
            p.column_ref.table = id;
            sets.insert(p.column_ref.clone(), s);
            profiles.push(p);
        }
        for (ci, values) in it.text_values {
            let col = ColumnRef::new(id, it.table.columns[ci].clone());
            for v in values {
                value_index.entry(v).or_default().insert(col.clone());
            }
        }
        tables.push(it.table);
    }
    if tables.is_empty() {
        return Err(Error::EmptyCorpus(corpus_dir.to_path_buf()));
    }
    let ind_edges = find_inclusion_dependencies(&profiles, Some(&sets), config.thresholds);
    Ok(DiscoveryIndex::assemble(
        root,
        config,
        tables,
        profiles,
        ind_edges,
        value_index,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_directory_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_index(dir.path(), IndexConfig::default()),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn unparseable_files_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("good.csv"), "a,b\n1,2\n").unwrap();
        std::fs::write(dir.path().join("bad.csv"), "a,b\n1,2,3\n").unwrap();
        let idx = build_index(dir.path(), IndexConfig::default()).unwrap();
        assert_eq!(idx.tables.len(), 1);
        assert_eq!(idx.tables[0].name, "good");
    }

    #[test]
    fn fig1_corpus_attributes_and_values() {
        let dir = tempfile::tempdir().unwrap();
        fixtures::write_employee_corpus(dir.path()).unwrap();
        let idx = build_index(dir.path(), IndexConfig::default()).unwrap();
        assert_eq!(idx.tables.len(), 5);
        let name_of = |c: &ColumnRef| idx.table(c.table).unwrap().name.clone();

        let addr: Vec<String> = idx.search_attribute("address").iter().map(name_of).collect();
        assert_eq!(addr, vec!["billing_address", "customers", "staff_2019", "staff_2020"]);
        assert_eq!(idx.search_attribute("  Address "), idx.search_attribute("address"));
        assert!(idx.search_attribute("addr").is_empty());

        let raul: Vec<String> = idx.search_value("Raul CF").iter().map(name_of).collect();
        assert_eq!(raul, vec!["employees"]);
        assert!(idx.search_value("no such value anywhere").is_empty());
        // Numeric cells are not in the value index.
        assert!(idx.search_value("1").is_empty());
    }

    #[test]
    fn fig1_spurious_customer_ind() {
        let dir = tempfile::tempdir().unwrap();
        fixtures::write_employee_corpus(dir.path()).unwrap();
        let idx = build_index(dir.path(), IndexConfig::default()).unwrap();
        let emp = idx.table_by_name("employees").unwrap().id;
        let cust = idx.table_by_name("customers").unwrap().id;
        assert!(idx.ind_edges.iter().any(|e| {
            e.from.table == emp && e.to.table == cust && e.from.column == "eid" && e.to.column == "cid"
        }));
        let s19 = idx.table_by_name("staff_2019").unwrap().id;
        let direct: Vec<_> = idx
            .join_paths(emp, s19, 1)
            .into_iter()
            .filter(|p| p.hops[0].from.column == "eid" && p.hops[0].to.column == "eid")
            .collect();
        assert_eq!(direct.len(), 1);
    }

    #[test]
    fn autocomplete_by_prefix() {
        let dir = tempfile::tempdir().unwrap();
        fixtures::write_employee_corpus(dir.path()).unwrap();
        let idx = build_index(dir.path(), IndexConfig::default()).unwrap();
        assert_eq!(idx.complete_attribute("add"), vec!["address"]);
    }
}
