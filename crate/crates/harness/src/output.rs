//! Experiment output directories.
//!
//! A directory holds `config.json`, the result files of the experiment and
//! `manifest.json`, which lists every file with its SHA-256 digest. The
//! creation time is recorded in the manifest only, so all other files are
//! reproducible byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CERTIFICATE_FILE: &str = "certificate.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub command: String,
    pub version: String,
    pub created_unix_seconds: u64,
    pub passed: bool,
    pub files: Vec<ManifestEntry>,
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates `root` (and parents) and writes `config.json`.
    pub fn create(root: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(root)?;
        let mut out = Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        };
        out.write_text(CONFIG_FILE, &(cfg.canonical_json()? + "\n"))?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, text)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// A numeric table with a header row.
    pub fn write_table(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<f64>],
    ) -> Result<PathBuf> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self, command: &str, passed: bool) -> Result<PathBuf> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let bytes = fs::read(self.root.join(name))?;
            files.push(ManifestEntry {
                file: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
        let cfg_name = fs::read_to_string(self.root.join(CONFIG_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<ExperimentConfig>(&t).ok())
            .map_or_else(String::new, |c| c.name);
        let manifest = Manifest {
            experiment: cfg_name,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            passed,
            files,
        };
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
