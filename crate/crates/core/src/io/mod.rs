//! Configuration, checkpoints, history files and reports.

mod checkpoint;
mod config;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, MAGIC, VERSION};
pub use config::{
    parse_config, parse_raw, validate, DataConfig, ExperimentConfig, OperatorConfig, OperatorName, OutputConfig, PointsPerDim,
    RawConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn history_to_csv(records: &[DiagnosticsRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(crate::diagnostics::CSV_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn write_history(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), csv::Error> {
    let bytes = history_to_csv(records)?;
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<DiagnosticsRecord>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(crate::diagnostics::CSV_COLUMNS) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "history columns {:?} differ from {:?}",
                headers.iter().collect::<Vec<_>>(),
                crate::diagnostics::CSV_COLUMNS
            ),
        )));
    }
    r.deserialize().collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
