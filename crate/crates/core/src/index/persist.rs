//! On-disk index layout.
//!
//! An index directory holds two files:
//!
//! * `catalog.json`: `format_version`, `corpus_root`, `config`, `tables`,
//!   `profiles` and `inclusion_dependencies`, pretty-printed JSON.
//! * `values.idx`: the value index as UTF-8 text. The first line is
//!   `viewdisc-values <format_version>`; every following line is a value,
//!   a tab, and the tab-separated list of `t<table id>:<column>` refs holding it.
//!   Values and column names never contain tabs or newlines because both are
//!   whitespace-normalized at ingest.
//!
//! Both files are written in sorted order so rebuilding an unchanged corpus
//! yields byte-identical output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ColumnProfile, DiscoveryIndex, InclusionDependency, IndexConfig};
use crate::error::{Error, Result};
use crate::table::{ColumnRef, Table, TableId};

pub const FORMAT_VERSION: u32 = 1;
pub const CATALOG_FILE: &str = "catalog.json";
pub const VALUES_FILE: &str = "values.idx";
const VALUES_MAGIC: &str = "viewdisc-values";

#[derive(Serialize, Deserialize)]
struct Catalog {
    format_version: u32,
    corpus_root: PathBuf,
    config: IndexConfig,
    tables: Vec<Table>,
    profiles: Vec<ColumnProfile>,
    inclusion_dependencies: Vec<InclusionDependency>,
}

impl DiscoveryIndex {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let catalog = Catalog {
            format_version: FORMAT_VERSION,
            corpus_root: self.corpus_root.clone(),
            config: self.config,
            tables: self.tables.clone(),
            profiles: self.profiles.clone(),
            inclusion_dependencies: self.ind_edges.clone(),
        };
        let mut json = serde_json::to_string_pretty(&catalog)?;
        json.push('\n');
        let cat_path = dir.join(CATALOG_FILE);
        fs::write(&cat_path, json).map_err(|e| Error::io(&cat_path, e))?;

        let mut values = format!("{VALUES_MAGIC} {FORMAT_VERSION}\n");
        for (v, cols) in &self.value_index {
            values.push_str(v);
            for c in cols {
                let _ = write!(values, "\t{}:{}", c.table, c.column);
            }
            values.push('\n');
        }
        let val_path = dir.join(VALUES_FILE);
        fs::write(&val_path, values).map_err(|e| Error::io(&val_path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<DiscoveryIndex> {
        let cat_path = dir.join(CATALOG_FILE);
        let text = fs::read_to_string(&cat_path).map_err(|e| Error::io(&cat_path, e))?;
        let catalog: Catalog = serde_json::from_str(&text)?;
        if catalog.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "catalog format_version {} unsupported (expected {FORMAT_VERSION})",
                catalog.format_version
            )));
        }
        let val_path = dir.join(VALUES_FILE);
        let text = fs::read_to_string(&val_path).map_err(|e| Error::io(&val_path, e))?;
        let value_index = parse_values(&text)?;
        Ok(DiscoveryIndex::assemble(
            catalog.corpus_root,
            catalog.config,
            catalog.tables,
            catalog.profiles,
            catalog.inclusion_dependencies,
            value_index,
        ))
    }
}

fn parse_values(text: &str) -> Result<BTreeMap<String, BTreeSet<ColumnRef>>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let expected = format!("{VALUES_MAGIC} {FORMAT_VERSION}");
    if header != expected {
        return Err(Error::Format(format!(
            "values.idx header {header:?}, expected {expected:?}"
        )));
    }
    let mut out = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let mut parts = line.split('\t');
        let value = parts.next().unwrap_or_default().to_string();
        let mut cols = BTreeSet::new();
        for p in parts {
            let col = parse_col(p).ok_or_else(|| {
                Error::Format(format!("values.idx line {}: bad column ref {p:?}", n + 2))
            })?;
            cols.insert(col);
        }
        out.insert(value, cols);
    }
    Ok(out)
}

fn parse_col(s: &str) -> Option<ColumnRef> {
    let (t, c) = s.split_once(':')?;
    let id = t.strip_prefix('t')?.parse().ok()?;
    Some(ColumnRef::new(TableId(id), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::index::build_index;

    #[test]
    fn save_load_and_determinism() {
        let corpus = tempfile::tempdir().unwrap();
        fixtures::write_employee_corpus(corpus.path()).unwrap();
        let out1 = tempfile::tempdir().unwrap();
        let out2 = tempfile::tempdir().unwrap();
        let a = build_index(corpus.path(), IndexConfig::default()).unwrap();
        a.save(out1.path()).unwrap();
        build_index(corpus.path(), IndexConfig::default())
            .unwrap()
            .save(out2.path())
            .unwrap();
        for f in [CATALOG_FILE, VALUES_FILE] {
            assert_eq!(
                fs::read(out1.path().join(f)).unwrap(),
                fs::read(out2.path().join(f)).unwrap(),
                "{f} differs between builds"
            );
        }
        let loaded = DiscoveryIndex::load(out1.path()).unwrap();
        assert_eq!(loaded.tables, a.tables);
        assert_eq!(loaded.profiles, a.profiles);
        assert_eq!(loaded.ind_edges, a.ind_edges);
        assert_eq!(loaded.value_index, a.value_index);
        assert_eq!(loaded.search_value("Raul CF"), a.search_value("Raul CF"));
    }

    #[test]
    fn rejects_unknown_version() {
        let corpus = tempfile::tempdir().unwrap();
        fixtures::write_employee_corpus(corpus.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        build_index(corpus.path(), IndexConfig::default())
            .unwrap()
            .save(out.path())
            .unwrap();
        let p = out.path().join(CATALOG_FILE);
        let text = fs::read_to_string(&p).unwrap().replace(
            "\"format_version\": 1",
            "\"format_version\": 99",
        );
        fs::write(&p, text).unwrap();
        assert!(matches!(DiscoveryIndex::load(out.path()), Err(Error::Format(_))));
    }
}
