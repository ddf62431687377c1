//! Ranking, Top-k% metrics, fold plans and cross-validated experiments.

pub mod ablation;
pub mod experiment;
pub mod folds;
pub mod metrics;
pub mod rank;

use thiserror::Error;

pub use ablation::{ablation_cells, run_ablation, AblationCell, AblationReport, CellKey};
pub use experiment::{run_experiment, run_prepared, sha256_hex, ExperimentError, ExperimentResult, ExperimentSpec, FoldResult};
pub use folds::{stratified_kfold, FoldPlan, Grouping, Split};
pub use metrics::{head_size, precision_at_k, recall_at_k, Fraction, MetricReport, PrecisionRecall, K_GRID};
pub use rank::{rank, RankedEntry, RankedList};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty ranked list")]
    EmptyList,
    #[error("no actual true positives among the ranked warnings")]
    NoActualTPs,
    #[error("warning {0} has no label")]
    MissingLabel(String),
    #[error("k must be in 1..=100, got {0}")]
    InvalidK(u32),
    #[error("score of {id} is {score}, expected a value in [0, 1]")]
    InvalidScore { id: String, score: f64 },
    #[error("need at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("stratum {stratum} has {count} members, fewer than k = {k}")]
    TooFewSamples { stratum: String, count: usize, k: usize },
}
