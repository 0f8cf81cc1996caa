//! Single-writer persistence: runners hand back in-memory artifacts and the
//! manifest stage writes them, then records what it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};

/// A file produced by a runner, addressed relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        Self {
            path: path.into(),
            contents: contents.into(),
        }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.contents).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub files: Vec<ManifestEntry>,
    pub stages: Vec<StageTiming>,
}

/// Name of the manifest inside a run directory; not listed in itself.
pub const MANIFEST_FILE: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes every artifact under `dir` and then `manifest.json`. Artifact paths
/// must be relative, unique and free of `..`.
pub fn write_run(
    dir: &Path,
    config: &ExperimentConfig,
    artifacts: &[Artifact],
    stages: Vec<StageTiming>,
) -> LabResult<RunManifest> {
    let mut seen = std::collections::BTreeSet::new();
    for a in artifacts {
        let p = Path::new(&a.path);
        if p.is_absolute()
            || p.components().any(|c| !matches!(c, std::path::Component::Normal(_)))
            || a.path == MANIFEST_FILE
        {
            return Err(LabError::Config(format!("illegal artifact path {:?}", a.path)));
        }
        if !seen.insert(a.path.as_str()) {
            return Err(LabError::Config(format!("duplicate artifact path {:?}", a.path)));
        }
    }
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let full: PathBuf = dir.join(&a.path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
        }
        std::fs::write(&full, &a.contents).map_err(|e| LabError::io(&full, e))?;
        files.push(ManifestEntry {
            path: a.path.clone(),
            sha256: sha256_hex(&a.contents),
            bytes: a.contents.len(),
        });
    }
    let manifest = RunManifest {
        kind: config.kind.name().to_string(),
        config_hash: config.hash(),
        seeds: config.seeds.clone(),
        files,
        stages,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json).map_err(|e| LabError::io(&path, e))?;
    Ok(manifest)
}

impl RunManifest {
    /// Checks that every listed file exists with the recorded digest.
    pub fn verify(&self, dir: &Path) -> LabResult<()> {
        for f in &self.files {
            let p = dir.join(&f.path);
            let bytes = std::fs::read(&p).map_err(|e| LabError::io(&p, e))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(LabError::Config(format!("{} does not match its manifest digest", f.path)));
            }
        }
        Ok(())
    }
}
