//! Run manifests tying payload files to the configuration that made them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::tables::write_file;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Kittel,
    Spectrum,
    Branches,
    PhaseDiagram,
    Fit,
}

impl OutputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Kittel => "kittel",
            OutputKind::Spectrum => "spectrum",
            OutputKind::Branches => "branches",
            OutputKind::PhaseDiagram => "phase-diagram",
            OutputKind::Fit => "fit",
        }
    }
}

/// Describes one persisted result. Only `created_unix` varies between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub kind: OutputKind,
    /// Payload file names relative to the manifest.
    pub payloads: Vec<String>,
    pub snapshot_hash: String,
    /// Resolved configuration, as TOML.
    pub config: String,
    pub created_unix: u64,
    pub tool_version: String,
}

impl OutputRecord {
    pub fn new(kind: OutputKind, config: &Config) -> Self {
        OutputRecord {
            kind,
            payloads: Vec::new(),
            snapshot_hash: config.snapshot_hash(),
            config: config.snapshot(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Writes every `(file name, contents)` payload into `dir`, then
/// `<stem>.manifest.json`. Returns the written paths, manifest last.
///
/// Nothing is written if `payloads` is empty.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    mut record: OutputRecord,
    payloads: &[(String, String)],
) -> Result<Vec<PathBuf>> {
    if payloads.is_empty() || payloads.iter().any(|(_, c)| c.is_empty()) {
        return Err(Error::Data(format!(
            "{}: no payload to write",
            record.kind.as_str()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(payloads.len() + 1);
    for (name, contents) in payloads {
        let path = dir.join(name);
        write_file(&path, contents)?;
        record.payloads.push(name.clone());
        written.push(path);
    }
    let path = dir.join(format!("{stem}.manifest.json"));
    let mut json = serde_json::to_string_pretty(&record).map_err(|e| Error::Data(e.to_string()))?;
    json.push('\n');
    write_file(&path, &json)?;
    written.push(path);
    Ok(written)
}

pub fn read_manifest(path: &Path) -> Result<OutputRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
