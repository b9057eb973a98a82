//! Run manifest: one entry per stage with the configuration hash, seed,
//! content hashes of every input and output, and wall-clock timing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub config_hash: String,
    pub seed: u64,
    /// Path (relative to the output directory when inside it) → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Stage-specific facts worth recording, e.g. synset list sizes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub facts: BTreeMap<String, serde_json::Value>,
    pub elapsed_ms: u128,
}

impl StageEntry {
    /// The entry with its timing zeroed, for reproducibility comparisons.
    pub fn content(&self) -> StageEntry {
        StageEntry {
            elapsed_ms: 0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn display_key(out_dir: &Path, path: &Path) -> String {
    path.strip_prefix(out_dir)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| path.to_path_buf())
        .to_string_lossy()
        .replace('\\', "/")
}

impl Manifest {
    pub fn load_or_default(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Artifact {
            path,
            message: e.to_string(),
        })
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Fails if any file recorded by `stage` is missing or has changed since.
    pub fn verify_stage(&self, out_dir: &Path, stage: &'static str) -> Result<()> {
        let Some(entry) = self.stages.get(stage) else {
            return Err(Error::MissingArtifact {
                path: out_dir.join(MANIFEST_FILE),
                command: stage,
            });
        };
        for (key, recorded) in entry.inputs.iter().chain(&entry.outputs) {
            let p = resolve_key(out_dir, key);
            if !p.exists() {
                return Err(Error::MissingArtifact {
                    path: p,
                    command: stage,
                });
            }
            if &sha256_file(&p)? != recorded {
                return Err(Error::Artifact {
                    path: p,
                    message: format!("changed since `{stage}` ran; run `{stage}` again"),
                });
            }
        }
        Ok(())
    }
}

fn resolve_key(out_dir: &Path, key: &str) -> PathBuf {
    let p = PathBuf::from(key);
    if p.is_absolute() {
        p
    } else {
        out_dir.join(p)
    }
}
