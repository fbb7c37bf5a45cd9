//! Shared output plumbing: the outcome type every runner returns, structured
//! error records, and the CSV/JSON/dat writers. Floats go through the
//! shortest round-trip formatter, so a rerun with the same config and seed
//! produces byte-identical files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn validation(msg: impl fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Tag used in the error record and mapped to an exit code by main.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::MissingInput(_) => "missing-input",
            CliError::Io { .. } | CliError::Csv { .. } => "io",
        }
    }
}

/// What a runner hands back: either a JSON summary for stdout or, for the
/// report command, preformatted text blocks. `breached` marks a verify run
/// whose worst residual exceeded its tolerance.
pub struct Outcome {
    pub rendered: Rendered,
    pub breached: bool,
}

pub enum Rendered {
    Json(Value),
    Text(String),
}

impl Outcome {
    pub fn json(doc: Value, breached: bool) -> Self {
        Outcome { rendered: Rendered::Json(doc), breached }
    }
}

/// Uniform summary document: the command name, the full parameter echo
/// (tolerances, grids, and seeds included, so every number in `results` can
/// be traced), and an optional pass verdict for the verify modes.
pub fn envelope(command: &str, params: &impl serde::Serialize, results: Value, pass: Option<bool>) -> Value {
    let mut doc = serde_json::json!({
        "command": command,
        "params": serde_json::to_value(params).expect("parameter structs serialize"),
        "results": results,
    });
    if let Some(p) = pass {
        doc["pass"] = Value::Bool(p);
    }
    doc
}

/// One-line machine-readable error on stderr.
pub fn error_record(kind: &str, message: &str) {
    let rec = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{rec}");
}

/// Shortest round-trip decimal form; infinities spelled out so they survive
/// a CSV round trip (serde_json would turn them into null).
pub fn fnum(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, doc: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("artifact documents serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Csv { path: path.to_path_buf(), source: e })?;
    let mut put = |rec: &mut dyn Iterator<Item = &str>| -> Result<(), CliError> {
        w.write_record(rec).map_err(|e| CliError::Csv { path: path.to_path_buf(), source: e })
    };
    put(&mut header.iter().copied())?;
    for row in rows {
        put(&mut row.iter().map(String::as_str))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Two-column whitespace table for plotting tools.
pub fn write_dat(path: &Path, rows: &[(f64, f64)]) -> Result<(), CliError> {
    let mut text = String::new();
    for (x, y) in rows {
        text.push_str(&fnum(*x));
        text.push(' ');
        text.push_str(&fnum(*y));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
