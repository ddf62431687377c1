//! CBOW word vectors with negative sampling, trained per fold.

pub mod checkpoint;

use ndarray::{Array2, ArrayView2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{load_embedding, save_embedding, CheckpointError};

use crate::preprocess::{PAD_ID, UNK_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Fraction of training tokens replaced by `<unk>` so its vector is trained.
    pub unk_rate: f64,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig { dim: 96, window: 5, negatives: 5, epochs: 10, lr: 0.025, unk_rate: 0.01, seed: 0 }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 {
            return Err("cbow dim, window and negatives must be >= 1".into());
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.unk_rate) {
            return Err("cbow lr must be > 0 and unk_rate in [0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("no non-pad tokens to train on")]
    EmptyCorpus,
}

/// `V × d` input vectors; row 0 (`<pad>`) is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub vectors: Array2<f64>,
    pub config: CbowConfig,
}

impl EmbeddingMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn cosine(&self, a: u32, b: u32) -> f64 {
        let (x, y) = (self.vectors.row(a as usize), self.vectors.row(b as usize));
        let denom = x.dot(&x).sqrt() * y.dot(&y).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            x.dot(&y) / denom
        }
    }
}

/// Row lookup: `L × d`, one row per token id.
pub fn embed(ids: &[u32], emb: &EmbeddingMatrix) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), emb.dim()));
    for (t, &id) in ids.iter().enumerate() {
        if id != PAD_ID {
            out.row_mut(t).assign(&emb.vectors.row(id as usize));
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss of one CBOW example and its gradient, kept sparse:
/// `grad_hidden` is d(loss)/d(mean context vector); each context row receives
/// `grad_hidden / |context|`. `out_grads` pairs output rows with their gradients.
pub struct CbowGrad {
    pub loss: f64,
    pub grad_hidden: Vec<f64>,
    pub out_grads: Vec<(u32, Vec<f64>)>,
}

pub fn cbow_example(
    w_in: ArrayView2<f64>,
    w_out: ArrayView2<f64>,
    context: &[u32],
    target: u32,
    negatives: &[u32],
) -> CbowGrad {
    let d = w_in.ncols();
    let mut h = vec![0.0; d];
    for &c in context {
        for (hv, x) in h.iter_mut().zip(w_in.row(c as usize)) {
            *hv += x;
        }
    }
    let inv = 1.0 / context.len() as f64;
    h.iter_mut().for_each(|v| *v *= inv);

    let mut loss = 0.0;
    let mut grad_hidden = vec![0.0; d];
    let mut out_grads = Vec::with_capacity(1 + negatives.len());
    for (word, label) in std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0))) {
        let row = w_out.row(word as usize);
        let score: f64 = row.iter().zip(&h).map(|(a, b)| a * b).sum();
        let p = sigmoid(score);
        loss -= if label == 1.0 { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
        let g = p - label;
        for (gh, r) in grad_hidden.iter_mut().zip(row) {
            *gh += g * r;
        }
        out_grads.push((word, h.iter().map(|x| g * x).collect()));
    }
    CbowGrad { loss, grad_hidden, out_grads }
}

/// Trains input vectors over `sequences` (pads are dropped). Returns the
/// matrix and the mean example loss of every epoch.
pub fn train_cbow(
    sequences: &[Vec<u32>],
    vocab_size: usize,
    cfg: &CbowConfig,
) -> Result<(EmbeddingMatrix, Vec<f64>), EmbeddingError> {
    let streams: Vec<Vec<u32>> =
        sequences.iter().map(|s| s.iter().copied().filter(|&t| t != PAD_ID).collect::<Vec<_>>()).filter(|s: &Vec<u32>| !s.is_empty()).collect();
    let total: usize = streams.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / d as f64;
    let mut w_in = Array2::from_shape_fn((vocab_size, d), |_| rng.gen_range(-bound..bound));
    w_in.row_mut(PAD_ID as usize).fill(0.0);
    let mut w_out = Array2::<f64>::zeros((vocab_size, d));

    let mut counts = vec![0.0f64; vocab_size];
    for &t in streams.iter().flatten() {
        counts[t as usize] += 1.0;
    }
    if cfg.unk_rate > 0.0 && (UNK_ID as usize) < vocab_size {
        counts[UNK_ID as usize] += (total as f64 * cfg.unk_rate).max(1.0);
    }
    let sampler = WeightedIndex::new(counts.iter().map(|c| c.powf(0.75))).expect("some token has positive count");

    let steps = (cfg.epochs * total) as f64;
    let mut done = 0usize;
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut negs = Vec::with_capacity(cfg.negatives);
    let mut ctx = Vec::with_capacity(2 * cfg.window);
    for _ in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut examples = 0usize;
        for stream in &streams {
            let s: Vec<u32> = stream
                .iter()
                .map(|&t| if cfg.unk_rate > 0.0 && rng.gen_bool(cfg.unk_rate) { UNK_ID } else { t })
                .collect();
            for (pos, &target) in s.iter().enumerate() {
                let lr = cfg.lr * (1.0 - done as f64 / steps).max(1e-4);
                done += 1;
                ctx.clear();
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(s.len());
                ctx.extend((lo..hi).filter(|&i| i != pos).map(|i| s[i]));
                if ctx.is_empty() {
                    continue;
                }
                negs.clear();
                for _ in 0..cfg.negatives {
                    let n = sampler.sample(&mut rng) as u32;
                    if n != target {
                        negs.push(n);
                    }
                }
                let g = cbow_example(w_in.view(), w_out.view(), &ctx, target, &negs);
                epoch_loss += g.loss;
                examples += 1;
                for (word, grad) in &g.out_grads {
                    let mut row = w_out.row_mut(*word as usize);
                    row.iter_mut().zip(grad).for_each(|(w, gr)| *w -= lr * gr);
                }
                let scale = lr / ctx.len() as f64;
                for &c in &ctx {
                    let mut row = w_in.row_mut(c as usize);
                    row.iter_mut().zip(&g.grad_hidden).for_each(|(w, gr)| *w -= scale * gr);
                }
            }
        }
        losses.push(if examples > 0 { epoch_loss / examples as f64 } else { 0.0 });
    }
    w_in.row_mut(PAD_ID as usize).fill(0.0);
    Ok((EmbeddingMatrix { vectors: w_in, config: *cfg }, losses))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CbowConfig {
        CbowConfig { dim: 8, window: 2, epochs: 5, seed: 3, ..CbowConfig::default() }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(train_cbow(&[vec![PAD_ID, PAD_ID]], 3, &cfg()).unwrap_err(), EmbeddingError::EmptyCorpus);
    }

    #[test]
    fn same_seed_bit_identical() {
        let data = vec![vec![2, 3, 4, 2, 3, 0, 0], vec![4, 4, 2]];
        let (a, la) = train_cbow(&data, 5, &cfg()).unwrap();
        let (b, lb) = train_cbow(&data, 5, &cfg()).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn pad_row_stays_zero() {
        let data = vec![vec![2, 0, 3, 0, 4, 0]];
        let (m, _) = train_cbow(&data, 5, &cfg()).unwrap();
        assert!(m.vectors.row(0).iter().all(|&x| x == 0.0));
        assert!(m.vectors.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn embed_selects_rows() {
        let (m, _) = train_cbow(&[vec![2, 3, 2, 3]], 4, &cfg()).unwrap();
        let e = embed(&[3, 0, 2], &m);
        assert_eq!(e.row(0), m.vectors.row(3));
        assert!(e.row(1).iter().all(|&x| x == 0.0));
        assert_eq!(e.row(2), m.vectors.row(2));
        assert!(embed(&[0, 0], &m).iter().all(|&x| x == 0.0));
    }

    fn loss_at(w_in: &Array2<f64>, w_out: &Array2<f64>, ctx: &[u32], target: u32, negs: &[u32]) -> f64 {
        cbow_example(w_in.view(), w_out.view(), ctx, target, negs).loss
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in [1u64, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (v, d) = (5, 4);
            let w_in = Array2::from_shape_fn((v, d), |_| rng.gen_range(-1.0..1.0));
            let w_out = Array2::from_shape_fn((v, d), |_| rng.gen_range(-1.0..1.0));
            let (ctx, target, negs) = ([1u32, 3, 4, 3], 2u32, [0u32, 4, 1]);
            let g = cbow_example(w_in.view(), w_out.view(), &ctx, target, &negs);
            let mut an_in = Array2::<f64>::zeros((v, d));
            for &c in &ctx {
                for k in 0..d {
                    an_in[[c as usize, k]] += g.grad_hidden[k] / ctx.len() as f64;
                }
            }
            let mut an_out = Array2::<f64>::zeros((v, d));
            for (w, gr) in &g.out_grads {
                for k in 0..d {
                    an_out[[*w as usize, k]] += gr[k];
                }
            }
            let eps = 1e-6;
            let mut worst: f64 = 0.0;
            for which in 0..2 {
                for i in 0..v {
                    for k in 0..d {
                        let (mut a, mut b) = (w_in.clone(), w_out.clone());
                        let (mut a2, mut b2) = (w_in.clone(), w_out.clone());
                        if which == 0 {
                            a[[i, k]] += eps;
                            a2[[i, k]] -= eps;
                        } else {
                            b[[i, k]] += eps;
                            b2[[i, k]] -= eps;
                        }
                        let num = (loss_at(&a, &b, &ctx, target, &negs) - loss_at(&a2, &b2, &ctx, target, &negs)) / (2.0 * eps);
                        let an = if which == 0 { an_in[[i, k]] } else { an_out[[i, k]] };
                        let rel = (num - an).abs() / (num.abs() + an.abs()).max(1e-8);
                        worst = worst.max(rel);
                    }
                }
            }
            assert!(worst <= 1e-4, "seed {seed}: max relative error {worst}");
        }
    }

    #[test]
    fn repeated_token_loss_decreases() {
        let c = CbowConfig { dim: 8, window: 2, epochs: 8, unk_rate: 0.0, seed: 5, ..CbowConfig::default() };
        let (_, losses) = train_cbow(&[vec![2; 40]], 3, &c).unwrap();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn planted_synonyms_are_closer_than_a_random_pair() {
        // tokens 2 and 3 always appear between 4 and 5; 6..12 fill other slots
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seqs = Vec::new();
        for _ in 0..300 {
            let mut s = Vec::new();
            for _ in 0..6 {
                s.push(rng.gen_range(6..12));
            }
            s.extend([4, if rng.gen_bool(0.5) { 2 } else { 3 }, 5]);
            for _ in 0..6 {
                s.push(rng.gen_range(6..12));
            }
            seqs.push(s);
        }
        let c = CbowConfig { dim: 16, window: 1, epochs: 10, seed: 4, ..CbowConfig::default() };
        let (m, _) = train_cbow(&seqs, 12, &c).unwrap();
        let syn = m.cosine(2, 3);
        assert!(syn > m.cosine(2, 7) && syn > m.cosine(3, 9), "synonym cosine {syn}");
    }
}
