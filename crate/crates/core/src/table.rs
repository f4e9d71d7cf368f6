//! CSV tables with JSON metadata sidecars.
//!
//! Every tabular artifact in this crate is written as `<name>.csv` plus a
//! `<name>.meta.json` sidecar. The CSV holds only the data grid (header row +
//! string cells); the sidecar carries everything a reader or plotter needs to
//! interpret it (axis labels, units, provenance, parameters).
//!
//! Formatting is byte-deterministic: cells are written exactly as given,
//! floats are rendered with [`fmt_f64`] (shortest representation that parses
//! back to the same bits), rows in caller order, `\n` line endings, and the
//! sidecar is serialized with sorted keys. Identical inputs therefore always
//! produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// An in-memory rectangular table: one header row plus string cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Appends a row; its arity must match the header.
    pub fn push_row<S: Into<String>>(&mut self, row: Vec<S>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::shape(
                format!("{} cells per row", self.columns.len()),
                format!("{}", row.len()),
            ));
        }
        self.rows.push(row.into_iter().map(Into::into).collect());
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All cells of one column, parsed as f64.
    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named {name:?}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[idx]
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("column {name:?}: {e} in {:?}", r[idx])))
            })
            .collect()
    }

    /// All cells of one column, as strings.
    pub fn str_column(&self, name: &str) -> Result<Vec<String>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[idx].clone()).collect())
    }
}

/// Canonical float formatting for table cells: the shortest decimal string
/// that round-trips to the same f64 (Rust's `Display` guarantee). NaN and
/// infinities render as `NaN` / `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v}")
    }
}

/// Sidecar path for a CSV: `foo.csv` → `foo.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes `table` to `path` and its metadata sidecar next to it.
pub fn write_table(path: &Path, table: &Table, metadata: &serde_json::Value) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(table.columns())?;
    for row in table.rows() {
        w.write_record(row)?;
    }
    w.flush()?;
    // serde_json maps are sorted by key, so the sidecar bytes are canonical.
    let mut bytes = serde_json::to_vec_pretty(metadata)?;
    bytes.push(b'\n');
    fs::write(meta_path(path), bytes)?;
    Ok(())
}

/// Reads a CSV written by [`write_table`] back into memory.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let columns: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    let mut table = Table::new(columns);
    for record in r.records() {
        let record = record?;
        table.push_row(record.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    }
    Ok(table)
}

/// Reads the metadata sidecar belonging to `csv_path`.
pub fn read_metadata(csv_path: &Path) -> Result<serde_json::Value> {
    let bytes = fs::read(meta_path(csv_path))?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Table {
        let mut t = Table::new(vec!["family", "accuracy", "n"]);
        t.push_row(vec!["band0".to_string(), fmt_f64(0.9875), "2000".to_string()]).unwrap();
        t.push_row(vec!["band4_dark".to_string(), fmt_f64(1.0 / 3.0), "2000".to_string()]).unwrap();
        t
    }

    #[test]
    fn round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("acc.csv");
        let meta = json!({"kind": "accuracy_table", "seed": 7});
        write_table(&path, &sample(), &meta).unwrap();
        let back = read_table(&path).unwrap();
        assert_eq!(back, sample());
        assert_eq!(read_metadata(&path).unwrap(), meta);
        // Float cells parse back to the exact original values.
        let accs = back.f64_column("accuracy").unwrap();
        assert_eq!(accs[1], 1.0 / 3.0);
    }

    #[test]
    fn writes_are_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let meta = json!({"b": 1, "a": {"z": [1, 2], "y": "x"}});
        write_table(&a, &sample(), &meta).unwrap();
        write_table(&b, &sample(), &meta).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read(meta_path(&a)).unwrap(), fs::read(meta_path(&b)).unwrap());
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut t = Table::new(vec!["a", "b"]);
        assert!(t.push_row(vec!["1"]).is_err());
        assert!(t.push_row(vec!["1", "2", "3"]).is_err());
        assert!(t.push_row(vec!["1", "2"]).is_ok());
    }

    #[test]
    fn float_formatting_round_trips_and_marks_non_finite() {
        for v in [0.0, -0.0, 1.0, 0.1, 2.0 / 3.0, 1e-300, -1.23456789e18, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn missing_column_is_an_error() {
        let t = sample();
        assert!(t.f64_column("nope").is_err());
        assert!(t.str_column("nope").is_err());
        assert_eq!(t.str_column("family").unwrap()[1], "band4_dark");
    }
}
