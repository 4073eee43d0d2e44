//! Result tables written as CSV or JSON, with columns taken from the
//! committed schema file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub const SCHEMA: &str = include_str!("../csv_schema.json");

#[derive(Debug, Deserialize)]
pub struct Column {
    pub name: String,
    #[allow(dead_code)]
    pub unit: String,
    #[allow(dead_code)]
    pub description: String,
}

#[derive(Debug, Deserialize)]
pub struct FileSchema {
    pub columns: Vec<Column>,
}

#[derive(Debug, Deserialize)]
pub struct Schema {
    pub files: BTreeMap<String, FileSchema>,
}

pub fn schema() -> &'static Schema {
    static SCHEMA_CELL: OnceLock<Schema> = OnceLock::new();
    SCHEMA_CELL.get_or_init(|| serde_json::from_str(SCHEMA).expect("schema file is valid JSON"))
}

/// `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::I(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.clone()),
            Cell::B(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows for one output file; `stem` names the schema entry `<stem>.csv`.
#[derive(Debug, Clone)]
pub struct Table {
    pub stem: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(stem: &'static str) -> Self {
        let file = schema()
            .files
            .get(&format!("{stem}.csv"))
            .unwrap_or_else(|| panic!("{stem}.csv missing from the schema"));
        Self {
            stem,
            columns: file.columns.iter().map(|c| c.name.clone()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of {}.csv", self.stem);
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf, CliError> {
        match format {
            Format::Csv => {
                let path = dir.join(format!("{}.csv", self.stem));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let path = dir.join(format!("{}.json", self.stem));
                let records: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let m: Map<String, Value> = self
                            .columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect();
                        Value::Object(m)
                    })
                    .collect();
                write_json(&path, &records)?;
                Ok(path)
            }
        }
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Whitespace-separated blocks, two blank lines apart, one per `(title, rows)`.
pub fn write_gnuplot(path: &Path, header: &[&str], blocks: &[(String, Vec<Vec<f64>>)]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", header.join(" "))?;
    for (k, (title, rows)) in blocks.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        writeln!(w, "# {title}")?;
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// gnuplot `matrix nonuniform` layout: first row holds the column count and
/// x values, each following row a y value and its data.
pub fn write_matrix(path: &Path, xs: &[f64], ys: &[f64], z: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut first = vec![xs.len().to_string()];
    first.extend(xs.iter().map(|v| fmt_float(*v)));
    writeln!(w, "{}", first.join(" "))?;
    for (y, row) in ys.iter().zip(z) {
        let mut line = vec![fmt_float(*y)];
        line.extend(row.iter().map(|v| fmt_float(*v)));
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads two numeric columns from a CSV with a header row.
pub fn read_pairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad value on data row {}", path.display(), line + 1)))
        };
        a.push(parse(0)?);
        b.push(parse(1)?);
    }
    Ok((a, b))
}
