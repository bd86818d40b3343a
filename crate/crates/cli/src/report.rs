//! Tabular reports written as CSV or JSON with a shared schema.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// JSON document: the manifest reference plus the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub manifest: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub table: Table,
}

/// 17 significant digits, enough to round-trip every `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn to_csv(doc: &Document) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# manifest={} config_hash={}", doc.manifest, doc.config_hash);
    out.push_str(&doc.table.columns.join(","));
    out.push('\n');
    for row in &doc.table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => format_float(*v),
                Cell::Text(t) => t.clone(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub fn from_csv(text: &str) -> Result<Table, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or("missing header row")?;
    let columns: Vec<String> = header.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for line in lines {
        let row: Vec<Cell> =
            line.split(',').map(|c| c.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(c.into()))).collect();
        if row.len() != columns.len() {
            return Err(format!("row has {} cells, header {}", row.len(), columns.len()));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

pub fn to_json(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("tables serialize");
    s.push('\n');
    s
}

/// Writes `<stem>.csv` or `<stem>.json` under `dir`.
pub fn write(dir: &Path, stem: &str, format: Format, doc: &Document) -> std::io::Result<()> {
    let (name, body) = match format {
        Format::Csv => (format!("{stem}.csv"), to_csv(doc)),
        Format::Json => (format!("{stem}.json"), to_json(doc)),
    };
    std::fs::write(dir.join(name), body)
}
