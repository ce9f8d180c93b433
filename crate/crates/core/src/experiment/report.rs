//! CSV tables and TOML summaries.
//!
//! Reals are written with 12 significant digits (`{:.11e}`) so that runs
//! with identical inputs produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Formats a real with 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_real(x).parse().expect("formatted real parses")
    } else {
        x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => fmt_real(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
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

/// A table with documented columns.
#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<(&'static str, &'static str)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` pairs a name with a one-line description.
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, title: &str, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {title}")?;
        for (name, doc) in &self.columns {
            writeln!(w, "# {name}: {doc}")?;
        }
        let header: Vec<&str> = self.columns.iter().map(|(n, _)| *n).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// One pass/fail line of a summary. `margin` is non-negative when the check
/// passes.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, margin: f64) -> Self {
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            margin: round12(margin),
        }
    }

    /// A check that has no natural margin.
    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            margin: if passed { 0.0 } else { -1.0 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub rows: usize,
    pub checks: Vec<Check>,
    /// Diagnostics that are reported but not asserted.
    #[serde(skip_serializing_if = "toml::Table::is_empty")]
    pub diagnostics: toml::Table,
    #[serde(skip_serializing_if = "toml::Table::is_empty")]
    pub details: toml::Table,
}

impl Summary {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            passed: true,
            rows: 0,
            checks: Vec::new(),
            diagnostics: toml::Table::new(),
            details: toml::Table::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn diagnostic(&mut self, key: impl Into<String>, value: f64) {
        self.diagnostics.insert(key.into(), toml::Value::Float(round12(value)));
    }

    /// Attaches a serialisable report under `key`, reals rounded.
    pub fn detail<T: Serialize>(&mut self, key: impl Into<String>, value: &T) -> Result<()> {
        let v = toml::Value::try_from(value).map_err(|e| Error::Config(format!("serialising report: {e}")))?;
        self.details.insert(key.into(), round_value(v));
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialising summary: {e}")))
    }
}

fn round_value(v: toml::Value) -> toml::Value {
    match v {
        toml::Value::Float(x) => toml::Value::Float(round12(x)),
        toml::Value::Array(a) => toml::Value::Array(a.into_iter().map(round_value).collect()),
        toml::Value::Table(t) => toml::Value::Table(t.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Paths written for one scenario.
#[derive(Clone, Debug)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<dir>/<scenario>.csv` and `<dir>/<scenario>.summary.toml`.
pub fn emit_report(dir: &Path, scenario: &str, table: &Table, summary: &Summary) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{scenario}.csv"));
    let mut buf = Vec::new();
    table
        .write_csv(scenario, &mut buf)
        .expect("writing to memory cannot fail");
    std::fs::write(&csv, buf).map_err(io_err(&csv))?;
    let summary_path = dir.join(format!("{scenario}.summary.toml"));
    std::fs::write(&summary_path, summary.to_toml()?).map_err(io_err(&summary_path))?;
    Ok(ReportFiles {
        csv,
        summary: summary_path,
    })
}
