use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adamax::{AdamaxConfig, AdamaxState};
use super::model::{forward, loss_and_grads, Batch, RankerModel, FP_CLASS, TP_CLASS};
use super::NeuralError;
use crate::embedding::EmbeddingMatrix;
use crate::preprocess::{PreparedWarning, TokenSequence, Vocabulary, PAD_ID};
use crate::seeds::substream;
use crate::warnings::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamaxConfig,
    /// Global gradient-norm ceiling; `0` disables clipping.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 60, batch_size: 64, optimizer: AdamaxConfig::default(), clip_norm: 5.0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 {
            return Err("batch_size must be >= 1".into());
        }
        if !(self.optimizer.lr > 0.0) || self.clip_norm < 0.0 {
            return Err("lr must be > 0 and clip_norm >= 0".into());
        }
        Ok(())
    }
}

/// A prepared warning mapped through a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWarning {
    pub id: String,
    pub label: Option<Label>,
    pub slice: Vec<u32>,
    pub slice_mask: Vec<bool>,
    pub stmt: Vec<u32>,
    pub stmt_mask: Vec<bool>,
}

pub fn encode_warning(p: &PreparedWarning, vocab: &Vocabulary) -> EncodedWarning {
    let enc = |s: &TokenSequence| vocab.encode(&s.tokens);
    EncodedWarning {
        id: p.id.clone(),
        label: p.label,
        slice: enc(&p.context),
        slice_mask: p.context.mask.clone(),
        stmt: enc(&p.stmt),
        stmt_mask: p.stmt.mask.clone(),
    }
}

fn fill(rows: &[&EncodedWarning], pick: fn(&EncodedWarning) -> (&[u32], &[bool]), emb: &EmbeddingMatrix) -> (Array3<f64>, Array2<bool>) {
    let l = rows.first().map_or(0, |r| pick(r).0.len());
    let mut x = Array3::zeros((rows.len(), l, emb.dim()));
    let mut mask = Array2::from_elem((rows.len(), l), false);
    for (bi, r) in rows.iter().enumerate() {
        let (ids, m) = pick(r);
        for (t, (&id, &real)) in ids.iter().zip(m).enumerate() {
            mask[[bi, t]] = real;
            // masked positions stay zero whatever token they hold
            if real && id != PAD_ID {
                x.slice_mut(ndarray::s![bi, t, ..]).assign(&emb.vectors.row(id as usize));
            }
        }
    }
    (x, mask)
}

/// Embeds a minibatch. Labels are filled only when every row is labeled.
pub fn make_batch(rows: &[&EncodedWarning], emb: &EmbeddingMatrix) -> Batch {
    let (slice, slice_mask) = fill(rows, |r| (&r.slice, &r.slice_mask), emb);
    let (stmt, stmt_mask) = fill(rows, |r| (&r.stmt, &r.stmt_mask), emb);
    let labels = rows
        .iter()
        .map(|r| r.label.map(|l| if l.is_tp() { TP_CLASS } else { FP_CLASS }))
        .collect::<Option<Vec<_>>>()
        .unwrap_or_default();
    Batch { slice, slice_mask, stmt, stmt_mask, labels }
}

/// Everything needed to continue training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: RankerModel,
    pub optimizer: AdamaxState,
    /// Seed of the shuffle and dropout substreams.
    pub seed: u64,
    /// Completed epochs.
    pub epoch: usize,
    pub epoch_losses: Vec<f64>,
}

impl TrainState {
    pub fn new(model: RankerModel, optimizer: AdamaxConfig, seed: u64) -> Self {
        let optimizer = AdamaxState::new(&model.params, optimizer);
        TrainState { model, optimizer, seed, epoch: 0, epoch_losses: Vec::new() }
    }
}

/// Runs epochs until `state.epoch == until`. Each epoch draws its shuffle and
/// dropout from substreams keyed by the epoch number, so a restored state
/// continues bit-for-bit.
pub fn train_until(
    state: &mut TrainState,
    data: &[EncodedWarning],
    emb: &EmbeddingMatrix,
    cfg: &TrainConfig,
    until: usize,
) -> Result<(), NeuralError> {
    if data.is_empty() {
        return Err(NeuralError::EmptyTrainingSet);
    }
    if let Some(w) = data.iter().find(|w| w.label.is_none()) {
        return Err(NeuralError::UnlabeledWarning(w.id.clone()));
    }
    while state.epoch < until {
        let e = state.epoch;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut substream(state.seed, &format!("shuffle/{e}")));
        let mut dropout = substream(state.seed, &format!("dropout/{e}"));
        let mut total = 0.0;
        let mut clipped = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<&EncodedWarning> = chunk.iter().map(|&i| &data[i]).collect();
            let batch = make_batch(&rows, emb);
            let mut out = loss_and_grads(&state.model, &batch, Some(&mut dropout))?;
            total += out.loss * rows.len() as f64;
            if cfg.clip_norm > 0.0 {
                let norm = out.grads.global_norm();
                if norm > cfg.clip_norm {
                    out.grads.scale(cfg.clip_norm / norm);
                    clipped += 1;
                }
            }
            state.optimizer.update(&mut state.model.params, &out.grads);
        }
        if clipped > 0 {
            log::info!("epoch {}: clipped gradient norm in {clipped} batches", e + 1);
        }
        let mean = total / data.len() as f64;
        log::debug!("epoch {}: loss {mean:.6}", e + 1);
        state.epoch_losses.push(mean);
        state.epoch += 1;
    }
    Ok(())
}

/// Fresh model trained for `cfg.epochs`.
pub fn train(
    model: RankerModel,
    data: &[EncodedWarning],
    emb: &EmbeddingMatrix,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainState, NeuralError> {
    let mut state = TrainState::new(model, cfg.optimizer, seed);
    train_until(&mut state, data, emb, cfg, cfg.epochs)?;
    Ok(state)
}

/// `p_tp` for every warning, in input order.
pub fn predict(
    model: &RankerModel,
    data: &[EncodedWarning],
    emb: &EmbeddingMatrix,
    batch_size: usize,
) -> Result<Vec<f64>, NeuralError> {
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks(batch_size.max(1)) {
        let rows: Vec<&EncodedWarning> = chunk.iter().collect();
        let probs = forward(model, &make_batch(&rows, emb), None)?;
        out.extend(probs.column(TP_CLASS).iter().copied());
    }
    Ok(out)
}
