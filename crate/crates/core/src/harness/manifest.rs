use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::eval::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// relative to the output directory
    pub path: String,
    pub sha256: String,
}

/// What a command ran with and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub corpus_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<ArtifactRecord>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, corpus_hash: &str) -> Self {
        RunManifest {
            command: command.into(),
            config: config.clone(),
            corpus_hash: corpus_hash.into(),
            seeds: BTreeMap::from([("root".to_string(), config.seed)]),
            artifacts: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Hashes a file under `root` and records it.
    pub fn record(&mut self, root: &Path, file: &Path) -> Result<(), HarnessError> {
        let bytes = fs::read(file).map_err(|source| HarnessError::Output { path: file.to_path_buf(), source })?;
        let rel = file.strip_prefix(root).unwrap_or(file);
        self.artifacts.push(ArtifactRecord { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    /// Records every regular file below `dir`, in path order.
    pub fn record_dir(&mut self, root: &Path, dir: &Path) -> Result<(), HarnessError> {
        let mut files = Vec::new();
        collect_files(dir, &mut files).map_err(|source| HarnessError::Output { path: dir.to_path_buf(), source })?;
        files.sort();
        for f in files {
            self.record(root, &f)?;
        }
        Ok(())
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn write(&self, root: &Path) -> Result<PathBuf, HarnessError> {
        let path = root.join(Self::file_name(&self.command));
        write_json(&path, self)?;
        Ok(path)
    }

    /// Artifacts whose current hash differs from the recorded one.
    pub fn stale_artifacts(&self, root: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| fs::read(root.join(&a.path)).map(|b| sha256_hex(&b) != a.sha256).unwrap_or(true))
            .map(|a| a.path.clone())
            .collect()
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let out = |source| HarnessError::Output { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(out)?;
    }
    fs::write(path, text).map_err(out)
}
