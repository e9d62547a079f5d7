//! Result tables and their CSV encoding.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits so values round-trip exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Named `(x, y)` series for external plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

/// Rows with named columns; the first column is always the config hash.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub curves: Vec<Curve>,
    pub violations: usize,
}

impl Table {
    pub fn new(config_hash: &str, columns: &[&str]) -> Self {
        Table {
            config_hash: config_hash.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            curves: Vec::new(),
            violations: 0,
        }
    }

    /// Appends a row given as `(column, value)` pairs; absent columns are empty.
    pub fn push(&mut self, values: &[(&str, Cell)]) {
        let mut row = vec![Cell::Empty; self.columns.len()];
        for (name, value) in values {
            let idx = self
                .columns
                .iter()
                .position(|c| c == name)
                .unwrap_or_else(|| panic!("unknown column `{name}`"));
            row[idx] = value.clone();
        }
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows whose `row` column equals `kind`.
    pub fn rows_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Vec<Cell>> + 'a {
        let idx = self.column("row");
        self.rows
            .iter()
            .filter(move |r| idx.is_some_and(|i| r[i] == Cell::Text(kind.to_string())))
    }

    pub fn value(&self, row: &[Cell], column: &str) -> Option<f64> {
        self.column(column).and_then(|i| row[i].as_f64())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# config_hash={} version={}", self.config_hash, ARTIFACT_VERSION)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["config_hash".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![self.config_hash.clone()];
            record.extend(row.iter().map(Cell::render));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    /// Writes one two-column CSV per curve into `dir`; returns the paths.
    pub fn write_plot_data(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.curves.len());
        for curve in &self.curves {
            let path = dir.join(format!("{}.csv", curve.name));
            let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(file, "# config_hash={} version={}", self.config_hash, ARTIFACT_VERSION)?;
            writeln!(file, "{},{}", curve.x_label, curve.y_label)?;
            for (x, y) in &curve.points {
                writeln!(file, "{},{}", Cell::Float(*x).render(), Cell::Float(*y).render())?;
            }
            file.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}
