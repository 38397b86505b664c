use std::fs;
use std::io::Write;

use cit_core::error::Error;
use cit_core::prob::PmfFile;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Format};

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("Io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("Serialization", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new("Serialization", e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<PmfFile>,
    pub result: Value,
    /// Flat records for `--format csv`.
    #[serde(skip)]
    pub rows: Option<Vec<Value>>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value, result: Value) -> Self {
        Self {
            tool: "cit",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            config,
            pmf: None,
            result,
            rows: None,
        }
    }

    pub fn with_pmf(mut self, pmf: PmfFile) -> Self {
        self.pmf = Some(pmf);
        self
    }

    pub fn with_rows(mut self, rows: Vec<Value>) -> Self {
        self.rows = Some(rows);
        self
    }
}

pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else {
        return Ok(());
    };
    if n == 0 {
        return Err(CliError::new("InvalidConfig", "--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new("InvalidConfig", e.to_string()))
}

fn csv_text(rows: &[Value]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    };
    w.write_record(&header)?;
    for row in rows {
        let fields: Vec<String> = header
            .iter()
            .map(|k| match &row[k] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                v => v.to_string(),
            })
            .collect();
        w.write_record(&fields)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("Io", e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn emit(cli: &Cli, report: &Report) -> CliResult<()> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Csv => match &report.rows {
            Some(rows) => csv_text(rows)?,
            None => {
                return Err(CliError::new(
                    "InvalidConfig",
                    format!("csv output is not available for `{}`", report.command),
                ))
            }
        },
    };
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
