//! Cross-validated pipeline runs: per split, the vocabulary, embeddings and
//! model are fit on the training warnings only and scored on the rest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::folds::{stratified_kfold, FoldPlan, Grouping};
use super::metrics::{MetricReport, K_GRID};
use super::rank::{rank, RankedList};
use super::EvalError;
use crate::dependence::SystemDependenceGraph;
use crate::embedding::checkpoint::encode_embedding;
use crate::embedding::{train_cbow, CbowConfig, EmbeddingError};
use crate::neural::checkpoint::encode_state;
use crate::neural::{encode_warning, predict, train, EncodedWarning, ModelConfig, NeuralError, RankerModel, TrainConfig};
use crate::preprocess::{prepare_dataset, vocab_for, PreparedWarning, PreprocessConfig, PreprocessError, Vocabulary};
use crate::seeds::derive_seed;
use crate::slicer::ContextMode;
use crate::warnings::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: ContextMode,
    pub preprocess: PreprocessConfig,
    pub embedding: CbowConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub folds: usize,
    pub grouping: Grouping,
    pub seed: u64,
    pub k_grid: Vec<u32>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mode: ContextMode::ControlAndData,
            preprocess: PreprocessConfig::default(),
            embedding: CbowConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            folds: 5,
            grouping: Grouping::Combined,
            seed: 0,
            k_grid: K_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Prepare(#[from] PreprocessError),
    #[error("{split}: {source}")]
    Embedding { split: String, source: EmbeddingError },
    #[error("{split}: {source}")]
    Neural { split: String, source: NeuralError },
    #[error("{split}: {source}")]
    Metric { split: String, source: EvalError },
    #[error("{split}: writing artifact: {source}")]
    Artifact { split: String, source: std::io::Error },
    #[error("prepared warnings do not line up with the dataset")]
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub split: String,
    pub train_size: usize,
    pub test_size: usize,
    pub vocab_size: usize,
    pub embedding_sha256: String,
    pub model_sha256: String,
    pub epoch_losses: Vec<f64>,
    pub metrics: MetricReport,
    pub ranked: RankedList,
    #[serde(skip)]
    pub vocab: Option<Vocabulary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    /// unweighted mean over splits
    pub report: MetricReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_stem(split: &str) -> String {
    split.replace('/', "__")
}

/// Prepares every warning and runs the cross-validation.
pub fn run_experiment(
    sdg: &SystemDependenceGraph,
    dataset: &Dataset,
    spec: &ExperimentSpec,
    artifacts: Option<&Path>,
) -> Result<ExperimentResult, ExperimentError> {
    let prepared = prepare_dataset(sdg, dataset, spec.mode, &spec.preprocess)?;
    run_prepared(&prepared, dataset, spec, artifacts)
}

/// Same as [`run_experiment`] for already prepared warnings, which must be in
/// dataset order. With `artifacts`, each split's embedding and model
/// checkpoints are written there.
pub fn run_prepared(
    prepared: &[PreparedWarning],
    dataset: &Dataset,
    spec: &ExperimentSpec,
    artifacts: Option<&Path>,
) -> Result<ExperimentResult, ExperimentError> {
    if prepared.len() != dataset.len() || prepared.iter().zip(&dataset.warnings).any(|(p, w)| p.id != w.id) {
        return Err(ExperimentError::Mismatch);
    }
    let plan = stratified_kfold(dataset, spec.folds, spec.seed, spec.grouping)?;
    let labels = dataset.labels();
    let mut folds = Vec::new();
    for split in plan.splits(dataset) {
        let name = split.name.clone();
        let train_prep: Vec<&PreparedWarning> = split.train.iter().map(|&i| &prepared[i]).collect();
        let vocab = vocab_for(&train_prep);
        let encode = |idx: &[usize]| -> Vec<EncodedWarning> { idx.iter().map(|&i| encode_warning(&prepared[i], &vocab)).collect() };
        let (train_set, test_set) = (encode(&split.train), encode(&split.test));

        let cbow = CbowConfig { seed: derive_seed(spec.seed, &format!("embedding/{name}")), ..spec.embedding };
        let streams: Vec<Vec<u32>> = train_set.iter().map(|w| w.slice.clone()).collect();
        let (emb, _) = train_cbow(&streams, vocab.len(), &cbow)
            .map_err(|source| ExperimentError::Embedding { split: name.clone(), source })?;

        let model_cfg = ModelConfig { seed: derive_seed(spec.seed, &format!("init/{name}")), ..spec.model.clone() };
        let neural = |source| ExperimentError::Neural { split: name.clone(), source };
        let state = train(
            RankerModel::new(model_cfg, emb.dim()),
            &train_set,
            &emb,
            &spec.training,
            derive_seed(spec.seed, &format!("train/{name}")),
        )
        .map_err(neural)?;
        let scores = predict(&state.model, &test_set, &emb, spec.training.batch_size).map_err(neural)?;

        let metric = |source| ExperimentError::Metric { split: name.clone(), source };
        let ranked = rank(test_set.iter().map(|w| w.id.clone()).zip(scores)).map_err(metric)?;
        let test_labels: BTreeMap<String, _> = test_set.iter().map(|w| (w.id.clone(), labels[&w.id])).collect();
        let metrics = MetricReport::evaluate(&ranked, &test_labels, &spec.k_grid).map_err(metric)?;

        let emb_bytes = encode_embedding(&emb);
        let model_bytes = encode_state(&state);
        if let Some(dir) = artifacts {
            let io = |source| ExperimentError::Artifact { split: name.clone(), source };
            fs::create_dir_all(dir).map_err(io)?;
            fs::write(dir.join(format!("{}.embedding", file_stem(&name))), &emb_bytes).map_err(io)?;
            fs::write(dir.join(format!("{}.model", file_stem(&name))), &model_bytes).map_err(io)?;
        }
        log::info!("{name}: R@20 {:.3}", metrics.recall(20).unwrap_or(f64::NAN));
        folds.push(FoldResult {
            split: name,
            train_size: split.train.len(),
            test_size: split.test.len(),
            vocab_size: vocab.len(),
            embedding_sha256: sha256_hex(&emb_bytes),
            model_sha256: sha256_hex(&model_bytes),
            epoch_losses: state.epoch_losses,
            metrics,
            ranked,
            vocab: Some(vocab),
        });
    }
    let reports: Vec<MetricReport> = folds.iter().map(|f| f.metrics.clone()).collect();
    let report = MetricReport::average(&reports).expect("at least two splits");
    Ok(ExperimentResult { spec: spec.clone(), plan, folds, report })
}
