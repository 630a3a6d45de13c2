use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass, detail: None }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Only with --timing, to keep reports byte-stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl Report {
    pub fn new(kind: &str, inputs: Value, results: Value, checks: Vec<Check>, table: Option<Table>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report { kind: kind.to_string(), inputs, results, checks, pass, wall_time_ms: None, table }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => match &self.table {
                Some(t) => Ok(t.render()),
                None => bail!("no tabular output for kind {}; use --format json", self.kind),
            },
        }
    }

    /// Writes to `out/<kind>.<ext>` when a directory is given, else to stdout.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let text = self.render(format)?;
        match out {
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let ext = if format == Format::Json { "json" } else { "csv" };
                let path = dir.join(format!("{}.{ext}", self.kind));
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
