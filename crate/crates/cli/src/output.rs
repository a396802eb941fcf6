//! Result bundles: plot-ready CSV tables and one JSON summary per run.
//!
//! Everything is rendered in memory first, so a failing run leaves no files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

/// Bumped whenever a CSV header or summary key changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
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

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// A column name with its unit; `None` marks a text column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: Option<&'static str>,
}

impl Column {
    pub fn header(&self) -> String {
        match self.unit {
            Some(u) => format!("{} [{}]", self.name, u),
            None => self.name.to_string(),
        }
    }
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit: Some(unit) }
}

pub const fn text(name: &'static str) -> Column {
    Column { name, unit: None }
}

/// Long-format table; the first column is the series label.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(Column::header)).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    fn describe(&self, inline: bool) -> Value {
        let mut v = json!({
            "name": self.name,
            "columns": self.columns.iter().map(Column::header).collect::<Vec<_>>(),
            "rows": self.rows.len(),
        });
        if inline {
            v["data"] = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        } else {
            v["file"] = json!(self.file_name());
        }
        v
    }
}

/// Outcome of one command.
#[derive(Debug, Clone, Default)]
pub struct ResultBundle {
    pub command: String,
    /// Key scalars and derived quantities.
    pub results: serde_json::Map<String, Value>,
    pub tables: Vec<Table>,
    /// Seeds actually used, by role.
    pub seeds: serde_json::Map<String, Value>,
    /// Human-readable lines for stdout.
    pub report: Vec<String>,
}

impl ResultBundle {
    pub fn new(command: &str) -> Self {
        ResultBundle {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn result(&mut self, key: &str, value: Value) {
        self.results.insert(key.into(), value);
    }

    pub fn seed(&mut self, role: &str, seed: u64) {
        self.seeds.insert(role.into(), json!(seed));
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.report.push(line.into());
    }

    pub fn summary(&self, config: &RunConfig, formats: &[Format]) -> Value {
        let inline = !formats.contains(&Format::Csv);
        // Where results go and how many workers ran them do not change them.
        let mut echo = serde_json::to_value(config).expect("config serializes");
        if let Some(m) = echo.as_object_mut() {
            m.remove("out");
            m.remove("threads");
        }
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "scenario": config.scenario,
            "seeds": self.seeds,
            "config": echo,
            "results": self.results,
            "tables": self.tables.iter().map(|t| t.describe(inline)).collect::<Vec<_>>(),
        })
    }

    /// File name and contents for every output, in write order.
    pub fn render(&self, config: &RunConfig) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if config.formats.contains(&Format::Csv) {
            files.extend(self.tables.iter().map(|t| (t.file_name(), t.to_csv())));
        }
        if config.formats.contains(&Format::Json) {
            let mut s = serde_json::to_string_pretty(&self.summary(config, &config.formats)).expect("summary serializes");
            s.push('\n');
            files.push(("summary.json".into(), s));
        }
        files
    }

    pub fn write(&self, config: &RunConfig, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let files = self.render(config);
        fs::create_dir_all(dir)?;
        files
            .into_iter()
            .map(|(name, body)| {
                let p = dir.join(name);
                fs::write(&p, body)?;
                Ok(p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers_carry_units_and_quote_text() {
        let mut t = Table::new("demo", vec![text("series"), col("t", "us"), col("p0", "1")]);
        t.push(vec!["a,b".into(), 0.5.into(), Cell::Empty]);
        assert_eq!(t.to_csv(), "series,t [us],p0 [1]\n\"a,b\",0.5,\n");
    }

    #[test]
    fn json_only_inlines_tables() {
        let mut b = ResultBundle::new("x");
        let mut t = Table::new("demo", vec![col("t", "us")]);
        t.push(vec![1.0.into()]);
        b.tables.push(t);
        let cfg = RunConfig {
            formats: vec![Format::Json],
            ..Default::default()
        };
        let files = b.render(&cfg);
        assert_eq!(files.len(), 1);
        let v: Value = serde_json::from_str(&files[0].1).unwrap();
        assert_eq!(v["tables"][0]["data"][0][0], json!(1.0));
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
    }
}
