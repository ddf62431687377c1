use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{parse_source, FrontendError, TranslationUnit};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("file `{0}` listed twice in manifest")]
    DuplicateFile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub path: String,
    pub project: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub files: Vec<CorpusEntry>,
}

/// A set of parsed `.mc` files with their project grouping.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub sources: Vec<String>,
    pub units: Vec<TranslationUnit>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

impl Corpus {
    pub fn from_sources(entries: Vec<(CorpusEntry, String)>) -> Result<Self, CorpusError> {
        let mut manifest = CorpusManifest::default();
        let mut sources = Vec::new();
        let mut units = Vec::new();
        for (entry, src) in entries {
            if manifest.files.iter().any(|e| e.path == entry.path) {
                return Err(CorpusError::DuplicateFile(entry.path));
            }
            units.push(parse_source(&src, &entry.path)?);
            manifest.files.push(entry);
            sources.push(src);
        }
        Ok(Corpus { manifest, sources, units })
    }

    /// Loads `dir/manifest.json` and every file it lists.
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let mpath = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
        let manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|source| CorpusError::Manifest { path: mpath.clone(), source })?;
        let mut entries = Vec::with_capacity(manifest.files.len());
        for e in manifest.files {
            let p = dir.join(&e.path);
            let src = fs::read_to_string(&p).map_err(io_err(&p))?;
            entries.push((e, src));
        }
        Self::from_sources(entries)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        for (e, src) in self.manifest.files.iter().zip(&self.sources) {
            let p = dir.join(&e.path);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&p, src).map_err(io_err(&p))?;
        }
        let mpath = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&mpath, json + "\n").map_err(io_err(&mpath))
    }

    pub fn project_of(&self) -> BTreeMap<String, String> {
        self.manifest.files.iter().map(|e| (e.path.clone(), e.project.clone())).collect()
    }

    pub fn unit(&self, path: &str) -> Option<&TranslationUnit> {
        self.units.iter().find(|u| u.source_id == path)
    }

    /// SHA-256 over manifest order, paths, projects and file contents.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (e, src) in self.manifest.files.iter().zip(&self.sources) {
            for part in [e.path.as_bytes(), e.project.as_bytes(), src.as_bytes()] {
                h.update((part.len() as u64).to_le_bytes());
                h.update(part);
            }
        }
        hex::encode(h.finalize())
    }
}
