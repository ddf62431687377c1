//! One function per CLI subcommand. Each returns the text to print; files go
//! under the configured output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::manifest::{write_json, write_text, RunManifest};
use super::{HarnessError, CACHE_DIR_ENV};
use crate::dependence::{build_sdg, SystemDependenceGraph};
use crate::embedding::checkpoint::{load_embedding, save_embedding};
use crate::embedding::{train_cbow, CbowConfig, EmbeddingMatrix};
use crate::eval::{rank, run_ablation, run_prepared, sha256_hex};
use crate::frontend::{Corpus, CorpusError};
use crate::neural::checkpoint::{load_state, save_state};
use crate::neural::{encode_warning, predict, train, EncodedWarning, ModelConfig, RankerModel};
use crate::preprocess::{
    prepare_dataset, read_cache, vocab_for, write_cache, PreparedWarning, PreprocessConfig, Vocabulary,
};
use crate::seeds::derive_seed;
use crate::slicer::{extract_context, render_context, ContextMode};
use crate::warnings::{detect_all, load_warnings, save_warnings, synthesize_with, to_jsonl, Dataset, VulnKind, Warning};

pub const VOCAB_FILE: &str = "vocab.json";
pub const EMBEDDING_FILE: &str = "embedding.bin";
pub const MODEL_FILE: &str = "model.ckpt";

/// Corpus, warnings and dependence graph for one run.
pub struct Inputs {
    pub corpus: Corpus,
    pub dataset: Dataset,
    pub sdg: SystemDependenceGraph,
    /// Hash over the corpus files and the warning list.
    pub corpus_hash: String,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs, HarnessError> {
    let (corpus, mut dataset) = match &cfg.corpus.dir {
        Some(dir) => {
            let corpus = Corpus::load(dir)?;
            let path = cfg.corpus.warnings.clone().unwrap_or_else(|| dir.join("warnings.jsonl"));
            let dataset = if path.exists() || cfg.corpus.warnings.is_some() {
                load_warnings(&path)?
            } else {
                log::info!("no warning list at {}, running the bundled detectors", path.display());
                Dataset { warnings: corpus.units.iter().flat_map(detect_all).collect(), ..Dataset::default() }
            };
            (corpus, dataset)
        }
        None => {
            let out = synthesize_with(&cfg.synth);
            (out.corpus, out.dataset)
        }
    };
    dataset.attach_projects(corpus.project_of())?;
    let sdg = build_sdg(&corpus.units)?;
    let mut h = Sha256::new();
    h.update(corpus.content_hash());
    h.update(to_jsonl(&dataset.warnings));
    Ok(Inputs { corpus, dataset, sdg, corpus_hash: hex::encode(h.finalize()) })
}

pub fn cache_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| cfg.output_dir.join("cache"))
}

/// Prepared warnings for `mode`/`pre`, read from the cache when an entry for
/// the same inputs exists. Returns the cache path and whether it was a hit.
pub fn prepared_warnings(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    mode: ContextMode,
    pre: &PreprocessConfig,
) -> Result<(Vec<PreparedWarning>, PathBuf, bool), HarnessError> {
    let key = sha256_hex(
        format!("{}|{}|{}", inputs.corpus_hash, mode, serde_json::to_string(pre).expect("config serializes")).as_bytes(),
    );
    let path = cache_dir(cfg).join(format!("prepared-{}.jsonl", &key[..16]));
    if path.exists() {
        if let Ok((header, prepared)) = read_cache(&path) {
            let lines_up = prepared.len() == inputs.dataset.len()
                && prepared.iter().zip(&inputs.dataset.warnings).all(|(p, w)| p.id == w.id);
            if header.corpus_hash == inputs.corpus_hash && header.mode == mode && header.config == *pre && lines_up {
                log::info!("cache hit: {}", path.display());
                return Ok((prepared, path, true));
            }
        }
        log::warn!("ignoring stale cache entry {}", path.display());
    }
    let prepared = prepare_dataset(&inputs.sdg, &inputs.dataset, mode, pre)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| HarnessError::Output { path: parent.to_path_buf(), source })?;
    }
    write_cache(&path, mode, pre, &inputs.corpus_hash, &prepared)?;
    Ok((prepared, path, false))
}

fn require_labels(dataset: &Dataset, command: &str) -> Result<(), HarnessError> {
    match dataset.warnings.iter().find(|w| w.label.is_none()) {
        Some(w) => Err(HarnessError::Unlabeled(format!(
            "`{command}` needs a TP/FP label on every warning; {} has none",
            w.id
        ))),
        None => Ok(()),
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

pub fn cmd_slice(cfg: &ExperimentConfig, file: &str, line: u32, mode: ContextMode) -> Result<String, HarnessError> {
    let inputs = load_inputs(cfg)?;
    let probe = Warning {
        id: format!("{file}:{line}"),
        file: file.into(),
        function: String::new(),
        line,
        kind: VulnKind::BufferOverflow,
        detector: "cli".into(),
        label: None,
    };
    let ctx = extract_context(&inputs.sdg, &probe, mode)?;
    Ok(render_context(&inputs.sdg, &ctx))
}

/// Writes the synthetic corpus, its warnings and the planted-site list under `<output>/corpus`.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let t = Instant::now();
    let out = synthesize_with(&cfg.synth);
    let dir = cfg.output_dir.join("corpus");
    out.corpus.write(&dir).map_err(|e| match e {
        CorpusError::Io { path, source } => HarnessError::Output { path, source },
        other => other.into(),
    })?;
    let wpath = dir.join("warnings.jsonl");
    save_warnings(&out.dataset.warnings, &wpath)?;
    let plants: String = out
        .plants
        .iter()
        .map(|p| {
            serde_json::json!({
                "warning": p.warning_id, "template": p.template, "label": p.label,
                "evidence_file": p.evidence_file, "evidence_line": p.evidence_line,
            })
            .to_string()
                + "\n"
        })
        .collect();
    write_text(&dir.join("plants.jsonl"), &plants)?;

    let inputs = Inputs {
        corpus_hash: String::new(),
        sdg: build_sdg(&out.corpus.units)?,
        corpus: out.corpus,
        dataset: out.dataset,
    };
    let mut m = RunManifest::new("synth", cfg, &inputs.corpus.content_hash());
    m.seeds.insert("synth".into(), cfg.synth.seed);
    m.record_dir(&cfg.output_dir, &dir)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(&cfg.output_dir)?;
    let tps = inputs.dataset.warnings.iter().filter(|w| w.label.is_some_and(|l| l.is_tp())).count();
    Ok(format!(
        "wrote {} files, {} warnings ({} TP) to {}\n",
        inputs.corpus.units.len(),
        inputs.dataset.len(),
        tps,
        dir.display()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepareSummary {
    pub mode: ContextMode,
    pub warnings: usize,
    pub cache: String,
    pub cache_sha256: String,
    pub cache_hit: bool,
    pub vocab_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_size_without_abstraction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_size_with_abstraction: Option<usize>,
}

fn vocab_size(prepared: &[PreparedWarning]) -> usize {
    vocab_for(&prepared.iter().collect::<Vec<_>>()).len()
}

pub fn cmd_prepare(cfg: &ExperimentConfig, compare_abstraction: bool) -> Result<(String, PrepareSummary), HarnessError> {
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    let mode = cfg.context.mode;
    let (prepared, path, hit) = prepared_warnings(cfg, &inputs, mode, &cfg.preprocess)?;
    let bytes = fs::read(&path).map_err(|source| HarnessError::Output { path: path.clone(), source })?;
    let mut summary = PrepareSummary {
        mode,
        warnings: prepared.len(),
        cache: path.display().to_string(),
        cache_sha256: sha256_hex(&bytes),
        cache_hit: hit,
        vocab_size: vocab_size(&prepared),
        vocab_size_without_abstraction: None,
        vocab_size_with_abstraction: None,
    };
    let mut text = format!(
        "{} warnings prepared ({}) -> {}{}\nvocabulary: {} tokens\n",
        summary.warnings,
        mode,
        summary.cache,
        if hit { " [cache hit]" } else { "" },
        summary.vocab_size
    );
    if compare_abstraction {
        let other = PreprocessConfig { abstraction_on: !cfg.preprocess.abstraction_on, ..cfg.preprocess };
        let (p2, _, _) = prepared_warnings(cfg, &inputs, mode, &other)?;
        let (on, off) = if cfg.preprocess.abstraction_on {
            (summary.vocab_size, vocab_size(&p2))
        } else {
            (vocab_size(&p2), summary.vocab_size)
        };
        summary.vocab_size_with_abstraction = Some(on);
        summary.vocab_size_without_abstraction = Some(off);
        text += &format!("vocabulary with abstraction: {on}\nvocabulary without abstraction: {off}\n");
    }
    let out = cfg.output_dir.join("prepare.json");
    write_json(&out, &summary)?;
    let mut m = RunManifest::new("prepare", cfg, &inputs.corpus_hash);
    m.record(&cfg.output_dir, &out)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(&cfg.output_dir)?;
    Ok((text, summary))
}

fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<(), HarnessError> {
    write_json(path, vocab)
}

fn read_vocab(path: &Path) -> Result<Vocabulary, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Input { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Input { path: path.to_path_buf(), message: e.to_string() })
}

fn fit_embedding(
    cfg: &ExperimentConfig,
    encoded: &[EncodedWarning],
    vocab: &Vocabulary,
) -> Result<EmbeddingMatrix, HarnessError> {
    let cbow = CbowConfig { seed: derive_seed(cfg.seed, "embedding/full"), ..cfg.embedding };
    let streams: Vec<Vec<u32>> = encoded.iter().map(|w| w.slice.clone()).collect();
    let (emb, _) = train_cbow(&streams, vocab.len(), &cbow).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    Ok(emb)
}

/// Vocabulary and CBOW vectors over every warning's context.
pub fn cmd_train_embed(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    let (prepared, _, _) = prepared_warnings(cfg, &inputs, cfg.context.mode, &cfg.preprocess)?;
    let vocab = vocab_for(&prepared.iter().collect::<Vec<_>>());
    let encoded: Vec<EncodedWarning> = prepared.iter().map(|p| encode_warning(p, &vocab)).collect();
    let emb = fit_embedding(cfg, &encoded, &vocab)?;
    let (vpath, epath) = (cfg.output_dir.join(VOCAB_FILE), cfg.output_dir.join(EMBEDDING_FILE));
    write_vocab(&vpath, &vocab)?;
    save_embedding(&emb, &epath).map_err(|e| match e {
        crate::embedding::CheckpointError::Io { path, source } => HarnessError::Output { path, source },
        other => HarnessError::Embedding(other),
    })?;
    let mut m = RunManifest::new("train-embed", cfg, &inputs.corpus_hash);
    m.seeds.insert("embedding/full".into(), derive_seed(cfg.seed, "embedding/full"));
    m.record(&cfg.output_dir, &vpath)?;
    m.record(&cfg.output_dir, &epath)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(&cfg.output_dir)?;
    Ok(format!("vocabulary {} tokens, embedding {}x{} -> {}\n", vocab.len(), emb.vocab_size(), emb.dim(), epath.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TrainSummary {
    mode: ContextMode,
    preprocess: PreprocessConfig,
    warnings: usize,
    vocab_size: usize,
    epoch_losses: Vec<f64>,
}

/// Vocabulary, embedding and ranker fit on every labeled warning.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    require_labels(&inputs.dataset, "train")?;
    let (prepared, _, _) = prepared_warnings(cfg, &inputs, cfg.context.mode, &cfg.preprocess)?;
    let vocab = vocab_for(&prepared.iter().collect::<Vec<_>>());
    let encoded: Vec<EncodedWarning> = prepared.iter().map(|p| encode_warning(p, &vocab)).collect();
    let emb = fit_embedding(cfg, &encoded, &vocab)?;
    let model_cfg = ModelConfig { seed: derive_seed(cfg.seed, "init/full"), ..cfg.model.clone() };
    let state = train(RankerModel::new(model_cfg, emb.dim()), &encoded, &emb, &cfg.training, derive_seed(cfg.seed, "train/full"))?;

    let dir = &cfg.output_dir;
    let out_err = |path: PathBuf| move |source| HarnessError::Output { path, source };
    write_vocab(&dir.join(VOCAB_FILE), &vocab)?;
    fs::write(dir.join(EMBEDDING_FILE), crate::embedding::checkpoint::encode_embedding(&emb))
        .map_err(out_err(dir.join(EMBEDDING_FILE)))?;
    save_state(&state, &dir.join(MODEL_FILE)).map_err(|e| match e {
        crate::neural::ModelCheckpointError::Io { path, source } => HarnessError::Output { path, source },
        other => HarnessError::Model(other),
    })?;
    let summary = TrainSummary {
        mode: cfg.context.mode,
        preprocess: cfg.preprocess,
        warnings: encoded.len(),
        vocab_size: vocab.len(),
        epoch_losses: state.epoch_losses.clone(),
    };
    write_json(&dir.join("train.json"), &summary)?;

    let mut m = RunManifest::new("train", cfg, &inputs.corpus_hash);
    for name in ["embedding/full", "init/full", "train/full"] {
        m.seeds.insert(name.into(), derive_seed(cfg.seed, name));
    }
    for f in [VOCAB_FILE, EMBEDDING_FILE, MODEL_FILE, "train.json"] {
        m.record(dir, &dir.join(f))?;
    }
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(dir)?;
    let last = state.epoch_losses.last().copied().unwrap_or(f64::NAN);
    Ok(format!("trained on {} warnings for {} epochs, final loss {last:.4}; model in {}\n", encoded.len(), state.epoch, dir.display()))
}

/// Scores every warning with a model written by `train` and writes the ranked list.
pub fn cmd_rank(cfg: &ExperimentConfig, model_dir: Option<&Path>) -> Result<String, HarnessError> {
    let t = Instant::now();
    let model_dir = model_dir.unwrap_or(&cfg.output_dir);
    let inputs = load_inputs(cfg)?;
    let vocab = read_vocab(&model_dir.join(VOCAB_FILE))?;
    let emb = load_embedding(&model_dir.join(EMBEDDING_FILE))?;
    let state = load_state(&model_dir.join(MODEL_FILE))?;
    if emb.vocab_size() != vocab.len() || state.model.input_dim != emb.dim() {
        return Err(HarnessError::Input {
            path: model_dir.to_path_buf(),
            message: "vocabulary, embedding and model do not belong together".into(),
        });
    }
    let (prepared, _, _) = prepared_warnings(cfg, &inputs, cfg.context.mode, &cfg.preprocess)?;
    let encoded: Vec<EncodedWarning> = prepared.iter().map(|p| encode_warning(p, &vocab)).collect();
    let scores = predict(&state.model, &encoded, &emb, cfg.training.batch_size)?;
    let ranked = rank(encoded.iter().map(|w| w.id.clone()).zip(scores))?;
    let out = cfg.output_dir.join("ranked.json");
    write_json(&out, &ranked)?;
    let mut m = RunManifest::new("rank", cfg, &inputs.corpus_hash);
    m.record(&cfg.output_dir, &out)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(&cfg.output_dir)?;
    let mut text = format!("{} warnings ranked -> {}\n", ranked.len(), out.display());
    for (i, e) in ranked.entries.iter().take(10).enumerate() {
        text += &format!("{:>4}  {:.4}  {}\n", i + 1, e.score, e.id);
    }
    Ok(text)
}

/// Cross-validated evaluation of the configured pipeline.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    require_labels(&inputs.dataset, "eval")?;
    let (prepared, _, _) = prepared_warnings(cfg, &inputs, cfg.context.mode, &cfg.preprocess)?;
    let dir = &cfg.output_dir;
    let ckpt = dir.join("checkpoints");
    let result = run_prepared(&prepared, &inputs.dataset, &cfg.spec(), Some(&ckpt))?;
    write_json(&dir.join("metrics.json"), &result.report)?;
    write_text(&dir.join("metrics.txt"), &result.report.table())?;
    write_json(&dir.join("folds.json"), &result.folds)?;

    let mut m = RunManifest::new("eval", cfg, &inputs.corpus_hash);
    m.seeds.insert("split".into(), derive_seed(cfg.seed, "split"));
    for f in &result.folds {
        for stream in ["embedding", "init", "train"] {
            let name = format!("{stream}/{}", f.split);
            m.seeds.insert(name.clone(), derive_seed(cfg.seed, &name));
        }
    }
    for f in ["metrics.json", "metrics.txt", "folds.json"] {
        m.record(dir, &dir.join(f))?;
    }
    m.record_dir(dir, &ckpt)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(dir)?;
    Ok(result.report.table())
}

/// All 16 context-mode × statement-branch × abstraction cells.
pub fn cmd_ablate(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let t = Instant::now();
    let inputs = load_inputs(cfg)?;
    require_labels(&inputs.dataset, "ablate")?;
    let dir = &cfg.output_dir;
    let ckpt = dir.join("ablation-checkpoints");
    let report = run_ablation(&inputs.sdg, &inputs.dataset, &cfg.spec(), Some(&ckpt))?;
    write_json(&dir.join("ablation.json"), &report)?;
    write_text(&dir.join("ablation.txt"), &report.table())?;
    let mut m = RunManifest::new("ablate", cfg, &inputs.corpus_hash);
    m.seeds.insert("split".into(), derive_seed(cfg.seed, "split"));
    m.record(dir, &dir.join("ablation.json"))?;
    m.record(dir, &dir.join("ablation.txt"))?;
    m.record_dir(dir, &ckpt)?;
    m.timings_ms.insert("total".into(), elapsed_ms(t));
    m.write(dir)?;
    Ok(report.table())
}

/// Per-cell mean recall at `k`, keyed by cell label; handy for scripts.
pub fn recall_by_cell(report: &crate::eval::AblationReport, k: u32) -> BTreeMap<String, f64> {
    report.cells.iter().map(|c| (c.key.label(), c.report.recall(k).unwrap_or(f64::NAN))).collect()
}
