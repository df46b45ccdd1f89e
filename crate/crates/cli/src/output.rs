//! Artifact writers. Series tables are CSV with the column header on the
//! first line; summaries and audit reports are JSON documents carrying
//! `schema_version`, the resolved config and its hash.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Envelope shared by every JSON artifact.
#[derive(Debug, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    pub command: &'a str,
    pub config_hash: String,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, config: &RunConfig, body: T) -> Result<(), CliError> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        kind,
        command: config.command.name(),
        config_hash: config.hash(),
        config,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Creates `dir` (and parents) and checks that a file can be written into it.
pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    let bad = |e: std::io::Error| CliError::Config(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(bad)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(bad)?;
    fs::remove_file(&probe).map_err(bad)
}
