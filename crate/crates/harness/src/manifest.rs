//! Run manifests and replay.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: String,
    pub seed: u64,
    /// SHA-256 of [`RunManifest::config`].
    pub config_hash: String,
    /// The config as TOML, with `output` removed.
    pub config: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::config("manifest", e.to_string()))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        if sha256_hex(self.config.as_bytes()) != self.config_hash {
            return Err(HarnessError::Mismatch(
                "embedded config does not match its hash".into(),
            ));
        }
        ExperimentConfig::from_toml_str(&self.config)
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Canonical text of a config: TOML without the output location.
pub(crate) fn canonical_config(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = None;
    c.to_toml_string()
}

/// Files written by one run, in write order.
pub(crate) struct Outputs {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

impl Outputs {
    pub(crate) fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
        Ok(Outputs {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.records.push(OutputRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub(crate) fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub(crate) fn root(&self) -> &Path {
        &self.root
    }

    pub(crate) fn into_records(self) -> Vec<OutputRecord> {
        self.records
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub checked: usize,
    /// One line per differing, missing or extra file.
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn is_identical(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-run the experiment recorded in `manifest_path` into `out_dir` and
/// compare every output hash.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<ReplayReport> {
    let old = RunManifest::load(manifest_path)?;
    let cfg = old.experiment()?;
    let new = crate::run(&cfg, out_dir)?.manifest;
    let mut mismatches = Vec::new();
    for rec in &old.outputs {
        match new.outputs.iter().find(|r| r.path == rec.path) {
            None => mismatches.push(format!("{}: not produced", rec.path)),
            Some(r) if r.sha256 != rec.sha256 => {
                mismatches.push(format!("{}: {} != {}", rec.path, r.sha256, rec.sha256))
            }
            Some(_) => {}
        }
    }
    for rec in &new.outputs {
        if !old.outputs.iter().any(|r| r.path == rec.path) {
            mismatches.push(format!("{}: not in manifest", rec.path));
        }
    }
    Ok(ReplayReport {
        checked: old.outputs.len(),
        mismatches,
    })
}
