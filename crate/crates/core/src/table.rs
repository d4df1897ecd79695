//! Tables, column references and loaded relations.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_attribute, normalize_cell};

/// Opaque table identifier, assigned in corpus path order at index time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableId(pub u32);

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// A column addressed by table and position. `column` is the normalized name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: TableId,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: TableId, column: impl Into<String>) -> Self {
        ColumnRef {
            table,
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// Catalog record of an ingested table. Rows live on disk and are loaded
/// on demand into a [`Relation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: TableId,
    pub name: String,
    /// Path relative to the corpus root.
    pub source_path: String,
    /// Normalized, unique column names in file order.
    pub columns: Vec<String>,
    pub row_count: u64,
}

impl Table {
    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }
}

pub type Row = Vec<String>;

/// An in-memory table: qualified column headers plus rows of normalized cells.
/// An empty cell is a null.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Relation {
    pub columns: Vec<ColumnRef>,
    pub rows: Vec<Row>,
}

impl Relation {
    pub fn position(&self, column: &ColumnRef) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rough in-memory footprint used for cache budgeting.
    pub fn approx_bytes(&self) -> usize {
        self.rows
            .iter()
            .map(row_bytes)
            .sum::<usize>()
            + self.columns.len() * 32
    }
}

pub fn row_bytes(row: &Row) -> usize {
    row.iter().map(|c| c.len() + 24).sum::<usize>() + 24
}

/// Raw CSV content: original header names and rows of trimmed cells.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

/// Read a CSV file (header mandatory, comma delimiter, RFC-4180 quoting).
pub fn read_csv(path: &Path) -> Result<CsvData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        rows.push(record.iter().map(normalize_cell).collect());
    }
    Ok(CsvData { header, rows })
}

/// Normalize header names and make them unique by suffixing `_2`, `_3`, ...
pub fn unique_column_names(header: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(header.len());
    for (i, h) in header.iter().enumerate() {
        let mut base = normalize_attribute(h);
        if base.is_empty() {
            base = format!("column_{}", i + 1);
        }
        let mut name = base.clone();
        let mut n = 2;
        while out.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        out.push(name);
    }
    out
}

/// Load a catalogued table from the corpus into a relation.
pub fn load_relation(corpus_root: &Path, table: &Table) -> Result<Relation> {
    let path: PathBuf = corpus_root.join(&table.source_path);
    let data = read_csv(&path)?;
    let columns = table
        .columns
        .iter()
        .map(|c| ColumnRef::new(table.id, c.clone()))
        .collect();
    Ok(Relation {
        columns,
        rows: data.rows,
    })
}

/// Write rows as CSV in the ingestion dialect.
pub fn write_csv<W: Write>(out: W, header: &[String], rows: &[Row]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Csv {
        path: PathBuf::from("<output>"),
        message: e.to_string(),
    };
    writer.write_record(header).map_err(to_err)?;
    for row in rows {
        writer.write_record(row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_headers_are_suffixed() {
        let h: Vec<String> = ["Name", " name", "", "Addr"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            unique_column_names(&h),
            vec!["name", "name_2", "column_3", "addr"]
        );
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            vec!["1".to_string(), "a, \"quoted\"".to_string()],
            vec!["2".to_string(), String::new()],
        ];
        write_csv(File::create(&path).unwrap(), &["id".into(), "v".into()], &rows).unwrap();
        let data = read_csv(&path).unwrap();
        assert_eq!(data.header, vec!["id", "v"]);
        assert_eq!(data.rows, rows);
    }

    #[test]
    fn ragged_csv_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2,3\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Csv { .. })));
    }
}
