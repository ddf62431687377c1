use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Masked max over time. Returns pooled `(batch, channels)` and the winning
/// time step of each cell; ties go to the earliest step.
pub fn global_max_pool(
    hs: ArrayView3<f64>,
    mask: ArrayView2<bool>,
) -> Result<(Array2<f64>, Array2<usize>), NeuralError> {
    let (b, l, c) = hs.dim();
    let mut out = Array2::from_elem((b, c), f64::NEG_INFINITY);
    let mut arg = Array2::zeros((b, c));
    for bi in 0..b {
        let mut any = false;
        for t in 0..l {
            if !mask[[bi, t]] {
                continue;
            }
            any = true;
            for k in 0..c {
                if hs[[bi, t, k]] > out[[bi, k]] {
                    out[[bi, k]] = hs[[bi, t, k]];
                    arg[[bi, k]] = t;
                }
            }
        }
        if !any {
            return Err(NeuralError::AllMasked { row: bi });
        }
    }
    Ok((out, arg))
}

pub fn global_max_pool_backward(d_pooled: ArrayView2<f64>, arg: &Array2<usize>, l: usize) -> Array3<f64> {
    let (b, c) = d_pooled.dim();
    let mut d = Array3::zeros((b, l, c));
    for bi in 0..b {
        for k in 0..c {
            d[[bi, arg[[bi, k]], k]] += d_pooled[[bi, k]];
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    /// `in × out`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl DenseParams {
    pub fn zeros(i: usize, o: usize) -> Self {
        DenseParams { w: Array2::zeros((i, o)), b: Array1::zeros(o) }
    }

    pub fn init<R: Rng>(i: usize, o: usize, rng: &mut R) -> Self {
        DenseParams { w: super::lstm::glorot(i, o, rng), b: Array1::zeros(o) }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// Inverted dropout mask: kept cells hold `1/(1-p)`, dropped cells 0.
pub fn dropout_mask<R: Rng>(shape: (usize, usize), p: f64, rng: &mut R) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_fn(shape, |_| if rng.gen::<f64>() < p { 0.0 } else { keep })
}

/// Row-wise softmax computed from shifted logits.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|z| (z - m).exp());
        let s = row.sum();
        row.mapv_inplace(|e| e / s);
    }
    out
}

/// Mean of `-log p[label]` using log-sum-exp on the logits.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.axis_iter(Axis(0)).zip(labels) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    total / labels.len() as f64
}
