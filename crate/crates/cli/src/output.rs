use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    /// Absent optional value: empty in CSV, null in JSON.
    Empty,
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<bool>> for Cell {
    fn from(v: Option<bool>) -> Self {
        v.map_or(Cell::Empty, Cell::Bool)
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

/// Plain decimal in the comfortable range, exponent form outside it. Both
/// round-trip exactly.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 || (1e-4..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// JSON has no NaN or infinity; those become null.
pub fn number_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn value(&self) -> Value {
        match self {
            Cell::Num(v) => number_value(*v),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
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

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows.iter().map(|row| Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::value)).collect())).collect(),
        )
    }

    /// Writes `<stem>.csv` or `<stem>.json`; returns the file name.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> io::Result<String> {
        match format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                fs::write(dir.join(&name), self.to_csv()?)?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{stem}.json");
                write_json(dir, &name, &self.to_json())?;
                Ok(name)
            }
        }
    }
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join(name), text)
}
