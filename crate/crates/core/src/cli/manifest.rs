//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Hash of (config hash, version, seed, command); JSON outputs carry it
    /// and CSV outputs are tied to it through their `sha256` entries here.
    pub run_id: String,
    pub command: String,
    pub config_sha256: String,
    pub artifact_version: String,
    pub seed: u64,
    pub timestamp: String,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn run_id(config_sha256: &str, seed: u64, command: &str) -> String {
    sha256_hex(format!("{config_sha256}:{ARTIFACT_VERSION}:{seed}:{command}").as_bytes())
}

/// Collects the files written by one command.
pub struct OutputDir {
    dir: PathBuf,
    run_id: String,
    entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path, run_id: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), run_id, entries: Vec::new() })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.entries.push(OutputEntry { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.put(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(self, command: &str, config_sha256: &str, seed: u64) -> Result<RunManifest> {
        let manifest = RunManifest {
            run_id: self.run_id,
            command: command.to_string(),
            config_sha256: config_sha256.to_string(),
            artifact_version: ARTIFACT_VERSION.to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join(MANIFEST_FILE), bytes)?;
        Ok(manifest)
    }
}
