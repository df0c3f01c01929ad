//! CSV and summary-log persistence.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` exactly and never depends on locale.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl RecordError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RecordError::Io { path: path.to_path_buf(), source }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
        }
    }
}

/// A row type with fixed, documented column names.
pub trait CsvRecord {
    const COLUMNS: &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

pub fn emit_csv<R: CsvRecord>(records: &[R], path: &Path) -> Result<(), RecordError> {
    let csv_err = |source| RecordError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err)?;
    w.write_record(R::COLUMNS).map_err(csv_err)?;
    for r in records {
        let cells = r.cells();
        debug_assert_eq!(cells.len(), R::COLUMNS.len());
        w.write_record(cells.into_iter().map(Cell::render)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| RecordError::io(path, e))
}

/// A CSV file read back as named float columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>, RecordError> {
        let fail = |message: String| RecordError::Format { path: self.path.clone(), message };
        let idx = self.header.iter().position(|h| h == name).ok_or_else(|| fail(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row[idx].parse::<f64>().map_err(|e| fail(format!("row {}, column `{name}`: {e}", i + 1))))
            .collect()
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, RecordError> {
    let csv_err = |source| RecordError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok(CsvTable { path: path.to_path_buf(), header, rows })
}

/// Appends one JSON object as a line to `path`.
pub fn append_summary(path: &Path, record: &Value) -> Result<(), RecordError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| RecordError::io(path, e))?;
    writeln!(f, "{record}").map_err(|e| RecordError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RecordError> {
    fs::write(path, text).map_err(|e| RecordError::io(path, e))
}

/// Lower-case hex SHA-256 of `text`.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
