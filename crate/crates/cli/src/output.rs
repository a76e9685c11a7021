use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str, description: &'static str) -> Column {
    Column { name, unit, description }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key=value` lines for the CSV header.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { columns, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows whose `status` column is not `ok`.
    pub fn error_rows(&self) -> usize {
        match self.columns.iter().position(|c| c.name == "status") {
            Some(i) => self.rows.iter().filter(|r| r[i] != Cell::Text("ok".into())).count(),
            None => 0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, meta: &[(String, String)]) -> anyhow::Result<()> {
        for (k, v) in meta.iter().chain(&self.notes) {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path, meta: &[(String, String)]) -> anyhow::Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?), meta)
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub csv: String,
    pub columns: &'a [Column],
    pub rows: usize,
    pub error_rows: usize,
    pub seeds: &'a [u64],
    pub seed_base: u64,
    pub config: serde_json::Value,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub jobs: usize,
}

impl Manifest<'_> {
    pub fn write_file(&self, path: &Path) -> anyhow::Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}
