//! Run manifests: config digest, code version, timestamps, produced files and
//! the small-fluctuation validity check. Written atomically at run end.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub margin: f64,
    pub order_of_magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excess_over_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub averaging_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub task: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity: Option<ValidityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// The resolved configuration (seed and task applied), embedded so the
    /// manifest alone is enough to re-execute the run.
    pub effective_config: crate::config::RunConfig,
}

impl RunManifest {
    /// Write `manifest.json` atomically (temp file + rename).
    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// SHA-256 of the effective configuration text.
pub fn config_hash(effective_config_json: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(effective_config_json.as_bytes());
    hex::encode(hasher.finalize())
}

/// Tracks files written during a run so a failed run leaves no partial output.
pub struct OutputTracker {
    dir: PathBuf,
    files: Vec<PathBuf>,
    committed: bool,
}

impl OutputTracker {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn files(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect()
    }

    pub fn commit(&mut self) {
        self.committed = true;
    }
}

impl Drop for OutputTracker {
    fn drop(&mut self) {
        if !self.committed {
            for f in &self.files {
                let _ = std::fs::remove_file(f);
            }
        }
    }
}
