//! Output envelopes. CSV files carry `# ` comment lines with the tool
//! version, seed and configuration ahead of the header row; JSON files wrap
//! the result in an object with the same metadata.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Format;
use crate::config::RunConfig;

pub const TOOL: &str = "subwalk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip representation, with an exponent for tiny and huge values.
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
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

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(&self, out: &mut String) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .expect("in-memory csv");
        }
        let bytes = w.into_inner().expect("in-memory csv");
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    }
}

/// Result of one command.
pub struct Report {
    pub table: Table,
    pub result: Value,
    /// Human-readable lines for standard error.
    pub notes: Vec<String>,
    /// Set when a verification or tolerance check failed.
    pub failure: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonOutput {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub result: Value,
}

pub fn render(config: &RunConfig, report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let doc = JsonOutput {
                tool: TOOL.into(),
                version: VERSION.into(),
                command: config.command.name().into(),
                seed: config.seed,
                config: config.clone(),
                result: report.result.clone(),
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("json output");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!(
                "# tool: {TOOL} {VERSION}\n# command: {}\n# seed: {}\n# config: {}\n",
                config.command.name(),
                config.seed,
                serde_json::to_string(config).expect("config json")
            );
            report.table.write_csv(&mut s);
            s
        }
    }
}

pub fn parse_json_output(text: &str) -> Result<JsonOutput, String> {
    serde_json::from_str(text).map_err(|e| format!("not a {TOOL} JSON output: {e}"))
}

/// The embedded configuration and the numeric payload of an output file.
/// For CSV the payload is everything after the comment lines.
pub fn split_output(text: &str) -> Result<(RunConfig, String), String> {
    if text.trim_start().starts_with('{') {
        let doc = parse_json_output(text)?;
        let payload = serde_json::to_string(&doc.result).map_err(|e| e.to_string())?;
        return Ok((doc.config, payload));
    }
    let mut config = None;
    let mut payload = String::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix("# config: ") {
            config =
                Some(serde_json::from_str(c).map_err(|e| format!("bad embedded config: {e}"))?);
        } else if !line.starts_with('#') {
            payload.push_str(line);
            payload.push('\n');
        }
    }
    config
        .map(|c| (c, payload))
        .ok_or_else(|| format!("no embedded `# config:` line; not a {TOOL} CSV output"))
}
