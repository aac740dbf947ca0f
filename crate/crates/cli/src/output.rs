//! Tables and their CSV / JSON-lines encodings.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::UInt(x) => x.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Bool(x) => x.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    /// Non-finite floats have no JSON number form and are written as strings.
    fn json(&self) -> Value {
        match self {
            Cell::Int(x) => json!(x),
            Cell::UInt(x) => json!(x),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Bool(x) => json!(x),
            Cell::Str(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::UInt(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::UInt(x as u64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::UInt(u64::from(x))
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Writes the header (tool version, command, configuration, columns)
/// followed by the rows. CSV carries the header as one `#` comment line
/// before the column names.
pub fn write_table(
    out: &mut dyn Write,
    format: Format,
    command: &str,
    config: &Value,
    table: &Table,
) -> io::Result<()> {
    let header = json!({
        "tool": "linnik",
        "version": linnik_core::VERSION,
        "command": command,
        "config": config,
        "columns": table.columns,
    });
    match format {
        Format::Csv => {
            writeln!(out, "# {header}")?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        Format::Json => {
            writeln!(out, "{}", json!({ "schema": header }))?;
            for row in &table.rows {
                let obj: Map<String, Value> =
                    table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(())
}
