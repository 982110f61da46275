//! Subcommand implementations. Each returns its complete output so nothing
//! is written unless the command succeeds.

mod outage_sweep;
mod power_sweep;
mod thresholds;
mod validate;

pub use outage_sweep::{outage_sweep, OutageRow};
pub use power_sweep::{power_sweep, PowerRow};
pub use thresholds::thresholds;
pub use validate::{validate, SuiteResult, ValidationReport};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Text produced by a command, where it goes, and whether the run passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub out: Option<PathBuf>,
    pub passed: bool,
}

impl Output {
    pub fn ok(body: String, out: Option<PathBuf>) -> Self {
        Self {
            body,
            out,
            passed: true,
        }
    }

    pub fn write(&self) -> CliResult<()> {
        emit(&self.body, self.out.as_deref())
    }
}

/// Write to `path`, or to stdout when no path is given.
pub fn emit(body: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|source| CliError::Write {
            path: p.to_owned(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Probability column: shortest round-trip scientific notation, or empty.
pub(crate) fn prob_field(v: Option<f64>) -> String {
    v.map(|p| format!("{p:e}")).unwrap_or_default()
}

pub(crate) fn csv_text(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_cfg = |e: csv::Error| CliError::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(to_cfg)?;
    for r in rows {
        w.write_record(r).map_err(to_cfg)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub(crate) fn json_text<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
