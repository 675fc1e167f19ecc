//! Run manifests: what went in, what came out, and with which settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<HashedFile>,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<HashedFile>,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Hash of everything above except the timestamps. Two runs with the
    /// same inputs and seed agree on it.
    pub run_hash: String,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(sha256_bytes(&bytes))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Collects a manifest while a command runs.
pub struct Recorder {
    command: String,
    inputs: Vec<HashedFile>,
    config: BTreeMap<String, String>,
    artifacts: Vec<PathBuf>,
    started: u64,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            config: BTreeMap::new(),
            artifacts: Vec::new(),
            started: now(),
        }
    }

    /// Hashes an input file; returns the hash for embedding elsewhere.
    pub fn input(&mut self, path: &Path) -> Result<String, CliError> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(HashedFile {
            path: path.display().to_string(),
            sha256: sha256.clone(),
        });
        Ok(sha256)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.to_path_buf());
    }

    /// Hashes the artifacts and writes `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path) -> Result<RunManifest, CliError> {
        let artifacts = self
            .artifacts
            .iter()
            .map(|p| {
                Ok(HashedFile {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let keyed = serde_json::json!({
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "artifacts": artifacts,
        });
        let run_hash = sha256_bytes(keyed.to_string().as_bytes());
        let m = RunManifest {
            command: self.command,
            inputs: self.inputs,
            config: self.config,
            artifacts,
            started_unix: self.started,
            finished_unix: now(),
            run_hash,
        };
        let path = manifest_path(primary);
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(m)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    sibling(primary, "manifest.json")
}

/// `dir/name.ext` -> `dir/name.ext.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
