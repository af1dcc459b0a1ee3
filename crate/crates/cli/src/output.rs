//! Tabular output as CSV or JSON.

use std::io::{self, Write};

use lifshitz::Error;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
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
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Nine significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let v = if v == 0.0 { 0.0 } else { v };
        format!("{v:.8e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.replace([',', '\n', '\r'], ";"),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) if v.is_finite() => {
                let rounded: f64 = format_number(*v).parse().expect("formatted float parses");
                serde_json::Number::from_f64(rounded).map_or(serde_json::Value::Null, serde_json::Value::Number)
            }
            Cell::Num(_) | Cell::Missing => serde_json::Value::Null,
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Text(s) => serde_json::Value::from(s.as_str()),
        }
    }
}

/// Row status token.
pub fn status_of(err: Option<&Error>) -> &'static str {
    match err {
        None => "ok",
        Some(Error::NonConvergence { .. }) => "nonconvergence",
        Some(Error::Input(_)) => "input_error",
        Some(_) => "domain_error",
    }
}

/// Process exit code for an error: 2 for bad input or domain, 3 for
/// numerical non-convergence.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => 3,
        _ => 2,
    }
}

pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Errors of rows that did not complete, in row order.
    pub errors: Vec<(usize, Error)>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    meta: serde_json::Map<String, serde_json::Value>,
    columns: &'a [String],
    rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { meta: Vec::new(), columns, rows: Vec::new(), errors: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Worst exit code over failed rows; domain errors take precedence.
    pub fn exit_code(&self) -> i32 {
        let codes: Vec<i32> = self.errors.iter().map(|(_, e)| exit_code(e)).collect();
        if codes.contains(&2) {
            2
        } else if codes.contains(&3) {
            3
        } else {
            0
        }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        let meta = self.meta.iter().map(|(k, v)| (k.clone(), serde_json::Value::from(v.as_str()))).collect();
        let rows = self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect();
        let table = JsonTable { meta, columns: &self.columns, rows };
        serde_json::to_writer_pretty(&mut *out, &table)?;
        writeln!(out)
    }
}
