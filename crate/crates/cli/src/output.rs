//! CSV tables and the JSON manifest written next to them.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Provenance and parameter echo of one run.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub outputs: Vec<String>,
    pub summary: Value,
}

impl Manifest {
    pub fn new(command: &'static str, seed: Option<u64>, config: &impl Serialize) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            git_describe: env!("GIT_DESCRIBE"),
            seed,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Run(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Run(format!("{}: {e}", path.display()))
}

/// CSV table with a mandatory header row.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| io_error(&path, e))?;
        writer.write_record(header).map_err(|e| io_error(&path, e))?;
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(|e| io_error(&self.path, e))
    }

    /// Flushes and returns the file name.
    pub fn finish(mut self) -> Result<String, CliError> {
        self.writer.flush().map_err(|e| io_error(&self.path, e))?;
        Ok(self
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default())
    }
}

/// Header cells from string literals.
pub fn header(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|c| c.to_string()).collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}
