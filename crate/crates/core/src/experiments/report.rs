use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, Format};
use crate::error::{Error, Result, Warning};

/// One table cell. Numbers print with 17 significant digits in CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// A named, rectangular table of results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Everything a run produced. Tables and summary are deterministic given the
/// config; only `created_unix` and `wall_clock_seconds` vary between runs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub version: String,
    pub created_unix: u64,
    pub wall_clock_seconds: f64,
    pub config: ExperimentConfig,
    pub summary: serde_json::Value,
    pub warnings: Vec<Warning>,
    pub tables: Vec<Table>,
    /// Extra files written next to the report, such as a constants file.
    #[serde(skip)]
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub file_name: String,
    pub contents: String,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `report.json` and, in CSV mode, one `<table>.csv` per table.
    /// Returns the paths written.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display(), e))?;
        let mut written = Vec::new();
        let json = match format {
            Format::Json => serde_json::to_string_pretty(self),
            Format::Csv => {
                let mut v = serde_json::to_value(self).expect("report serializes");
                v["tables"] = serde_json::Value::Array(
                    self.tables
                        .iter()
                        .map(|t| serde_json::Value::String(format!("{}.csv", t.name)))
                        .collect(),
                );
                serde_json::to_string_pretty(&v)
            }
        }
        .expect("report serializes");
        let path = dir.join("report.json");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(path.display(), e))?;
        written.push(path);
        for a in &self.attachments {
            let path = dir.join(&a.file_name);
            std::fs::write(&path, &a.contents).map_err(|e| Error::io(path.display(), e))?;
            written.push(path);
        }
        if format == Format::Csv {
            for t in &self.tables {
                let path = dir.join(format!("{}.csv", t.name));
                std::fs::write(&path, t.to_csv()).map_err(|e| Error::io(path.display(), e))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting() {
        let mut t = Table::new("demo", &["name", "value", "count"]);
        t.push(vec!["a,b".into(), 0.1.into(), 3usize.into()]);
        t.push(vec!["c".into(), Cell::Num(-2.0), 0usize.into()]);
        assert_eq!(
            t.to_csv(),
            "name,value,count\n\"a,b\",1.0000000000000001e-1,3\nc,-2.0000000000000000e0,0\n"
        );
    }

    #[test]
    #[should_panic]
    fn ragged_row_panics() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![1.0.into()]);
    }
}
