//! TOML experiment configuration. Every key is optional; omitted keys take
//! the defaults below.
//!
//! ```toml
//! seed = 0
//! output_dir = "warnrank-out"
//!
//! [corpus]                 # omit `dir` to use the synthetic corpus
//! dir = "data/synthetic"
//! warnings = "data/synthetic/warnings.jsonl"
//!
//! [synth]
//! seed = 7
//! n_projects = 4
//! tp_rate = 0.3
//!
//! [context]
//! mode = "control_and_data"
//!
//! [preprocess]
//! l_slice = 600
//! l_stmt = 40
//! abstraction_on = true
//!
//! [embedding]
//! dim = 96
//!
//! [model]
//! hidden = 256
//! dense_sizes = [256, 64, 2]
//! dropout = 0.1
//! use_stmt_branch = true
//!
//! [training]
//! epochs = 60
//! batch_size = 64
//! clip_norm = 5.0
//! [training.optimizer]
//! lr = 0.002
//!
//! [split]
//! folds = 5
//! grouping = "combined"
//!
//! [report]
//! k_grid = [1, 5, 10, 20, 30, 40, 50, 60]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::embedding::CbowConfig;
use crate::eval::{ExperimentSpec, Grouping, K_GRID};
use crate::neural::{ModelConfig, TrainConfig};
use crate::preprocess::PreprocessConfig;
use crate::slicer::ContextMode;
use crate::warnings::SynthConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Directory holding `manifest.json` and the `.mc` files.
    pub dir: Option<PathBuf>,
    /// Warning list; defaults to `<dir>/warnings.jsonl`, or detector output when that is absent.
    pub warnings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextSection {
    pub mode: ContextMode,
}

impl Default for ContextSection {
    fn default() -> Self {
        ContextSection { mode: ContextMode::ControlAndData }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub folds: usize,
    pub grouping: Grouping,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { folds: 5, grouping: Grouping::Combined }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub k_grid: Vec<u32>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { k_grid: K_GRID.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    pub synth: SynthConfig,
    pub context: ContextSection,
    pub preprocess: PreprocessConfig,
    pub embedding: CbowConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub split: SplitSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("warnrank-out"),
            corpus: CorpusSection::default(),
            synth: SynthConfig::default(),
            context: ContextSection::default(),
            preprocess: PreprocessConfig::default(),
            embedding: CbowConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            split: SplitSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml(&text).map_err(|message| HarnessError::Config { path: path.to_path_buf(), message })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let checks = [
            self.synth.validate(),
            self.preprocess.validate(),
            self.embedding.validate(),
            self.model.validate(),
            self.training.validate(),
        ];
        for c in checks {
            c.map_err(HarnessError::Invalid)?;
        }
        if self.split.folds < 2 {
            return Err(HarnessError::Invalid(format!("split.folds must be >= 2, got {}", self.split.folds)));
        }
        if self.report.k_grid.is_empty() || self.report.k_grid.iter().any(|&k| k == 0 || k > 100) {
            return Err(HarnessError::Invalid("report.k_grid values must lie in 1..=100".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            mode: self.context.mode,
            preprocess: self.preprocess,
            embedding: self.embedding,
            model: self.model.clone(),
            training: self.training,
            folds: self.split.folds,
            grouping: self.split.grouping,
            seed: self.seed,
            k_grid: self.report.k_grid.clone(),
        }
    }
}
