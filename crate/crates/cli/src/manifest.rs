use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::FileConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Provenance of one output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub tool_version: &'static str,
    pub master_seed: Option<u64>,
    /// Values in force after flags and config were merged.
    pub config: FileConfig,
    /// Command-specific settings outside [`FileConfig`].
    pub details: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started: String,
    pub finished: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct ManifestBuilder {
    command: Vec<String>,
    started: DateTime<Utc>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start() -> Self {
        Self { command: std::env::args().collect(), started: Utc::now(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `manifest.json` into `dir`.
    pub fn finish(self, dir: &Path, config: &FileConfig, details: serde_json::Value) -> Result<PathBuf> {
        let hashes = |paths: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            paths.iter().map(|p| Ok((p.display().to_string(), sha256_file(p)?))).collect()
        };
        let stamp = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            master_seed: config.seed,
            config: config.clone(),
            details,
            inputs: hashes(&self.inputs)?,
            outputs: hashes(&self.outputs)?,
            started: stamp(self.started),
            finished: stamp(Utc::now()),
        };
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
