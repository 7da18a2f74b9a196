//! Run manifest: config echo, content hashes of the input data and every
//! artifact, and per-stage status.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shapvic::{Error, Result};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub blob_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, InputRecord>,
    pub stages: Vec<StageRecord>,
    /// File name to git-style blob hash.
    pub artifacts: BTreeMap<String, String>,
    pub partial: bool,
}

/// SHA-256 over `blob <len>\0<content>`, the object framing git uses.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(blob_hash(&bytes))
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool: "shapvic".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            stages: Vec::new(),
            artifacts: BTreeMap::new(),
            partial: false,
        }
    }

    pub fn record_input(&mut self, key: &str, path: &Path) -> Result<()> {
        self.inputs.insert(
            key.into(),
            InputRecord {
                path: path.display().to_string(),
                blob_sha256: hash_file(path)?,
            },
        );
        Ok(())
    }

    pub fn record_artifacts(&mut self, dir: &Path, names: &[&str]) -> Result<()> {
        for name in names {
            let p = dir.join(name);
            if p.exists() {
                self.artifacts.insert((*name).to_string(), hash_file(&p)?);
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Checks that a run completed and that every listed artifact still has
/// the recorded content.
pub fn validate_manifest(dir: &Path, expected_artifacts: &[&str]) -> Result<Manifest> {
    let m = Manifest::read(&dir.join(crate::stages::MANIFEST_JSON))?;
    if m.partial {
        return Err(Error::Validation("manifest marks the run as partial".into()));
    }
    if let Some(s) = m.stages.iter().find(|s| s.status != StageStatus::Ok) {
        return Err(Error::Validation(format!("stage `{}` did not complete", s.name)));
    }
    for name in expected_artifacts {
        if !m.artifacts.contains_key(*name) {
            return Err(Error::Validation(format!("artifact `{name}` missing from manifest")));
        }
    }
    for (name, hash) in &m.artifacts {
        let actual = hash_file(&dir.join(name))?;
        if &actual != hash {
            return Err(Error::Validation(format!("artifact `{name}` changed since the run")));
        }
    }
    Ok(m)
}
