//! Row storage that is either resident or spilled to a temp file.
//!
//! Spill files hold length-prefixed binary rows: a little-endian `u32` cell
//! count, then per cell a little-endian `u32` byte length and the UTF-8 bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tempfile::TempPath;

use crate::error::{Error, Result};
use crate::table::{row_bytes, ColumnRef, Row};

#[derive(Debug)]
pub struct SpillFile {
    path: TempPath,
    rows: usize,
    bytes: u64,
}

impl SpillFile {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[derive(Debug, Clone)]
pub enum RowStore {
    Memory(Arc<Vec<Row>>),
    Spilled(Arc<SpillFile>),
}

impl Default for RowStore {
    fn default() -> Self {
        RowStore::Memory(Arc::new(Vec::new()))
    }
}

impl RowStore {
    pub fn from_rows(rows: Vec<Row>) -> Self {
        RowStore::Memory(Arc::new(rows))
    }

    pub fn len(&self) -> usize {
        match self {
            RowStore::Memory(r) => r.len(),
            RowStore::Spilled(f) => f.rows,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_spilled(&self) -> bool {
        matches!(self, RowStore::Spilled(_))
    }

    /// Visit every row in order.
    pub fn for_each(&self, mut f: impl FnMut(&Row) -> Result<()>) -> Result<()> {
        match self {
            RowStore::Memory(rows) => rows.iter().try_for_each(f),
            RowStore::Spilled(file) => {
                let mut reader = SpillReader::open(file.path())?;
                while let Some(row) = reader.next_row()? {
                    f(&row)?;
                }
                Ok(())
            }
        }
    }

    pub fn to_vec(&self) -> Result<Vec<Row>> {
        match self {
            RowStore::Memory(rows) => Ok(rows.as_ref().clone()),
            RowStore::Spilled(_) => {
                let mut out = Vec::with_capacity(self.len());
                self.for_each(|r| {
                    out.push(r.clone());
                    Ok(())
                })?;
                Ok(out)
            }
        }
    }

    /// Borrow resident rows without copying, loading spilled ones.
    pub fn resident(&self) -> Result<Arc<Vec<Row>>> {
        match self {
            RowStore::Memory(rows) => Ok(Arc::clone(rows)),
            RowStore::Spilled(_) => Ok(Arc::new(self.to_vec()?)),
        }
    }

    /// Mean row footprint over the first `limit` rows.
    pub fn mean_row_bytes(&self, limit: usize) -> Result<f64> {
        let mut n = 0usize;
        let mut total = 0usize;
        match self {
            RowStore::Memory(rows) => {
                for r in rows.iter().take(limit) {
                    total += row_bytes(r);
                    n += 1;
                }
            }
            RowStore::Spilled(file) => {
                let mut reader = SpillReader::open(file.path())?;
                while n < limit {
                    match reader.next_row()? {
                        Some(r) => {
                            total += row_bytes(&r);
                            n += 1;
                        }
                        None => break,
                    }
                }
            }
        }
        Ok(if n == 0 { 0.0 } else { total as f64 / n as f64 })
    }
}

/// A relation whose rows may be spilled.
#[derive(Debug, Clone, Default)]
pub struct StoredRelation {
    pub columns: Vec<ColumnRef>,
    pub rows: RowStore,
}

impl StoredRelation {
    pub fn new(columns: Vec<ColumnRef>, rows: Vec<Row>) -> Self {
        StoredRelation {
            columns,
            rows: RowStore::from_rows(rows),
        }
    }

    pub fn position(&self, column: &ColumnRef) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub struct SpillWriter {
    path: PathBuf,
    out: BufWriter<File>,
    rows: usize,
    bytes: u64,
    guard: Option<TempPath>,
}

impl SpillWriter {
    pub fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(SpillWriter {
            path,
            out: BufWriter::new(file),
            rows: 0,
            bytes: 0,
            guard: None,
        })
    }

    /// A fresh file in `dir` (or the system temp dir) removed on drop unless
    /// turned into a row store.
    pub fn temp_in(dir: Option<&Path>) -> Result<Self> {
        let base = dir.map(Path::to_path_buf).unwrap_or_else(std::env::temp_dir);
        let file = tempfile::Builder::new()
            .prefix("viewdisc-")
            .suffix(".rows")
            .tempfile_in(&base)
            .map_err(|e| Error::Spill(format!("{}: {e}", base.display())))?;
        let (file, guard) = file.into_parts();
        let path = guard.to_path_buf();
        Ok(SpillWriter {
            path,
            out: BufWriter::new(file),
            rows: 0,
            bytes: 0,
            guard: Some(guard),
        })
    }

    pub fn write_row(&mut self, row: &Row) -> Result<()> {
        let spill_err = |e: std::io::Error| Error::Spill(format!("{}: {e}", self.path.display()));
        let mut buf = Vec::with_capacity(4 + row.iter().map(|c| c.len() + 4).sum::<usize>());
        buf.extend_from_slice(&(row.len() as u32).to_le_bytes());
        for cell in row {
            buf.extend_from_slice(&(cell.len() as u32).to_le_bytes());
            buf.extend_from_slice(cell.as_bytes());
        }
        self.out.write_all(&buf).map_err(spill_err)?;
        self.rows += 1;
        self.bytes += buf.len() as u64;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    /// Flush and return (path, rows, bytes on disk).
    pub fn finish(mut self) -> Result<(PathBuf, usize, u64)> {
        self.flush()?;
        let on_disk = std::fs::metadata(&self.path)
            .map_err(|e| Error::io(&self.path, e))?
            .len();
        if let Some(g) = self.guard.take() {
            // Caller takes ownership of the file.
            let _ = g.keep();
        }
        Ok((self.path.clone(), self.rows, on_disk))
    }

    fn flush(&mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::Spill(format!("{}: {e}", self.path.display())))
    }

    /// Finish into a self-deleting spilled row store.
    pub fn into_store(mut self) -> Result<RowStore> {
        self.flush()?;
        let path = match self.guard.take() {
            Some(g) => g,
            None => TempPath::try_from_path(self.path.clone()).map_err(|e| Error::Spill(format!("{}: {e}", self.path.display())))?,
        };
        Ok(RowStore::Spilled(Arc::new(SpillFile {
            path,
            rows: self.rows,
            bytes: self.bytes,
        })))
    }
}

impl SpillFile {
    pub fn bytes(&self) -> u64 {
        self.bytes
    }
}

pub struct SpillReader {
    input: BufReader<File>,
    path: PathBuf,
}

impl SpillReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(SpillReader {
            input: BufReader::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn next_row(&mut self) -> Result<Option<Row>> {
        let mut len = [0u8; 4];
        match self.input.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(Error::io(&self.path, e)),
        }
        let cells = u32::from_le_bytes(len) as usize;
        let mut row = Vec::with_capacity(cells);
        for _ in 0..cells {
            self.input
                .read_exact(&mut len)
                .map_err(|e| Error::io(&self.path, e))?;
            let mut bytes = vec![0u8; u32::from_le_bytes(len) as usize];
            self.input
                .read_exact(&mut bytes)
                .map_err(|e| Error::io(&self.path, e))?;
            row.push(
                String::from_utf8(bytes)
                    .map_err(|e| Error::Spill(format!("{}: {e}", self.path.display())))?,
            );
        }
        Ok(Some(row))
    }
}
