//! Configuration, artifact bookkeeping and the pipeline commands behind the CLI.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::*;
pub use config::ExperimentConfig;
pub use manifest::{ArtifactRecord, RunManifest};

use crate::dependence::SdgError;
use crate::embedding::CheckpointError;
use crate::eval::{EvalError, ExperimentError};
use crate::frontend::CorpusError;
use crate::neural::{ModelCheckpointError, NeuralError};
use crate::preprocess::{CacheError, PreprocessError};
use crate::slicer::SliceError;
use crate::warnings::WarningsError;

pub const CACHE_DIR_ENV: &str = "WARNRANK_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USER: i32 = 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Warnings(#[from] WarningsError),
    #[error(transparent)]
    Graph(#[from] SdgError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Prepare(#[from] PreprocessError),
    #[error("{0}")]
    Unlabeled(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("reading model: {0}")]
    Embedding(#[from] CheckpointError),
    #[error("reading model: {0}")]
    Model(#[from] ModelCheckpointError),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// 2 for problems with the user's input or configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. }
            | HarnessError::Invalid(_)
            | HarnessError::Corpus(_)
            | HarnessError::Warnings(_)
            | HarnessError::Graph(_)
            | HarnessError::Slice(_)
            | HarnessError::Prepare(_)
            | HarnessError::Unlabeled(_)
            | HarnessError::Embedding(_)
            | HarnessError::Model(_)
            | HarnessError::Input { .. } => EXIT_USER,
            HarnessError::Experiment(e) => match e {
                ExperimentError::Eval(_) | ExperimentError::Prepare(_) => EXIT_USER,
                _ => EXIT_INTERNAL,
            },
            HarnessError::Eval(_) => EXIT_USER,
            HarnessError::Neural(NeuralError::UnlabeledWarning(_)) => EXIT_USER,
            HarnessError::Neural(_) | HarnessError::Cache(_) | HarnessError::Output { .. } => EXIT_INTERNAL,
        }
    }
}
