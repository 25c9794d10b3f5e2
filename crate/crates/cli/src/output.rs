//! Artifact writing with provenance headers and rollback.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Metadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        Metadata {
            tool: "fwmg".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: hex::encode(Sha256::digest(&canonical)),
            seed: config.seed(),
        }
    }

    fn comment(&self) -> String {
        format!(
            "{} {} {} config_hash={} seed={}",
            self.tool, self.version, self.command, self.config_hash, self.seed
        )
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    metadata: &'a Metadata,
    #[serde(flatten)]
    payload: &'a T,
}

/// Writes files into an output directory and deletes them again unless the
/// command commits.
pub struct OutputSet {
    dir: PathBuf,
    metadata: Metadata,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path, metadata: Metadata) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            metadata,
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    /// JSON object with a `metadata` field followed by the payload's fields.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> CliResult<PathBuf> {
        let stamped = Stamped {
            metadata: &self.metadata,
            payload,
        };
        let mut text = serde_json::to_string_pretty(&stamped).map_err(|e| CliError::json(&self.dir.join(name), e))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// CSV with a `#` comment line carrying the metadata.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let mut text = format!("# {}\n{}\n", self.metadata.comment(), header.join(","));
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn svg(&mut self, name: &str, body: &str) -> CliResult<PathBuf> {
        let text = body.replacen("<svg ", &format!("<!-- {} -->\n<svg ", self.metadata.comment()), 1);
        self.write(name, &text)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            if fs::remove_file(path).is_ok() {
                log::warn!("removed partial output {}", path.display());
            }
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

pub fn fmt(v: f64) -> String {
    format!("{v:.9e}")
}
