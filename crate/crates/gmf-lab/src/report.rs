//! Machine-readable run artifacts: CSV tables and JSON documents, written
//! atomically so a failed run never leaves a partial file behind.
//!
//! CSV follows the common RFC-4180 conventions: a mandatory header row,
//! CRLF line endings, and double-quote escaping only where needed. Floats
//! are printed with seventeen significant digits so they round-trip
//! exactly. JSON objects are emitted with sorted keys, so identical runs
//! produce identical bytes up to explicitly time-stamped metadata fields.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Seventeen-significant-digit scientific notation; round-trips any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// An in-memory CSV table with a fixed column set.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> CsvTable {
        CsvTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Contract(format!(
                "CSV row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Serializes header and rows with CRLF endings.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_record(&mut out, &self.columns);
        for row in &self.rows {
            render_record(&mut out, row);
        }
        out
    }
}

fn render_record(out: &mut String, cells: &[String]) {
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if cell.contains(',') || cell.contains('"') || cell.contains('\n') || cell.contains('\r') {
            out.push('"');
            out.push_str(&cell.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(cell);
        }
    }
    out.push_str("\r\n");
}

/// Writes through a temporary sibling file and renames it into place, so
/// the destination either keeps its old content or holds the full new
/// content, never a prefix.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Contract(format!("cannot write to {}", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", name.to_string_lossy()));
    if let Err(e) = fs::write(&tmp, bytes) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn write_csv(path: &Path, table: &CsvTable) -> Result<()> {
    atomic_write(path, table.render().as_bytes())
}

/// Pretty-printed JSON with a trailing newline. Objects built from the
/// default `serde_json` map type come out with sorted keys.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Contract(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}
