//! The context-mode × statement-branch × abstraction matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{run_prepared, ExperimentError, ExperimentSpec, FoldResult};
use super::metrics::MetricReport;
use crate::dependence::SystemDependenceGraph;
use crate::neural::ModelConfig;
use crate::preprocess::{prepare_dataset, PreprocessConfig};
use crate::slicer::ContextMode;
use crate::warnings::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub mode: ContextMode,
    pub use_stmt_branch: bool,
    pub abstraction_on: bool,
}

impl CellKey {
    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.mode,
            if self.use_stmt_branch { "stmt" } else { "no-stmt" },
            if self.abstraction_on { "abstract" } else { "raw-names" }
        )
    }
}

/// All 16 cells, grouped by preprocessing so prepared data can be reused.
pub fn ablation_cells() -> Vec<CellKey> {
    let mut out = Vec::with_capacity(16);
    for mode in ContextMode::ALL {
        for abstraction_on in [true, false] {
            for use_stmt_branch in [true, false] {
                out.push(CellKey { mode, use_stmt_branch, abstraction_on });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDigest {
    pub split: String,
    pub vocab_size: usize,
    pub embedding_sha256: String,
    pub model_sha256: String,
    pub metrics: MetricReport,
}

impl From<&FoldResult> for FoldDigest {
    fn from(f: &FoldResult) -> Self {
        FoldDigest {
            split: f.split.clone(),
            vocab_size: f.vocab_size,
            embedding_sha256: f.embedding_sha256.clone(),
            model_sha256: f.model_sha256.clone(),
            metrics: f.metrics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub key: CellKey,
    pub report: MetricReport,
    pub folds: Vec<FoldDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub base: ExperimentSpec,
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    pub fn cell(&self, key: CellKey) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.key == key)
    }

    /// One row per cell with the recall at every k.
    pub fn table(&self) -> String {
        let ks: Vec<u32> = self.base.k_grid.clone();
        let mut s = format!("{:<36}", "cell (mode/stmt/abstraction)");
        for k in &ks {
            s += &format!("  {:>6}", format!("R@{k}"));
        }
        s += "\n";
        for c in &self.cells {
            s += &format!("{:<36}", c.key.label());
            for k in &ks {
                s += &format!("  {:>6.3}", c.report.recall(*k).unwrap_or(f64::NAN));
            }
            s += "\n";
        }
        s
    }
}

pub fn run_ablation(
    sdg: &SystemDependenceGraph,
    dataset: &Dataset,
    base: &ExperimentSpec,
    artifacts: Option<&Path>,
) -> Result<AblationReport, ExperimentError> {
    let mut cells = Vec::with_capacity(16);
    let mut prepared = None;
    for key in ablation_cells() {
        let preprocess = PreprocessConfig { abstraction_on: key.abstraction_on, ..base.preprocess };
        let spec = ExperimentSpec {
            mode: key.mode,
            preprocess,
            model: ModelConfig { use_stmt_branch: key.use_stmt_branch, ..base.model.clone() },
            ..base.clone()
        };
        let cached = matches!(&prepared, Some((m, p, _)) if *m == key.mode && *p == preprocess);
        if !cached {
            prepared = Some((key.mode, preprocess, prepare_dataset(sdg, dataset, key.mode, &preprocess)?));
        }
        let data = &prepared.as_ref().expect("just filled").2;
        let dir = artifacts.map(|d| d.join(key.label().replace('/', "__")));
        log::info!("ablation cell {}", key.label());
        let result = run_prepared(data, dataset, &spec, dir.as_deref())?;
        cells.push(AblationCell { key, report: result.report, folds: result.folds.iter().map(FoldDigest::from).collect() });
    }
    Ok(AblationReport { base: base.clone(), cells })
}
