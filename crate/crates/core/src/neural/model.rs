//! The two-branch ranker: BiLSTM + masked max pooling per branch, then a
//! dense stack ending in a 2-way softmax `(p_tp, p_fp)`.

use ndarray::{concatenate, s, Array2, Array3, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    cross_entropy, dropout_mask, global_max_pool, global_max_pool_backward, softmax, DenseParams,
};
use super::lstm::{lstm_backward, lstm_forward, LstmParams, LstmTrace};
use super::{ModelConfig, NeuralError};
use crate::seeds::substream;

/// Class index of "true positive" in labels and probability rows.
pub const TP_CLASS: usize = 0;
pub const FP_CLASS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    fn zeros(d: usize, h: usize) -> Self {
        BiLstmParams { fwd: LstmParams::zeros(d, h), bwd: LstmParams::zeros(d, h) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub slice: BiLstmParams,
    pub stmt: Option<BiLstmParams>,
    pub dense: Vec<DenseParams>,
}

pub struct Block<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

fn lstm_blocks<'a>(prefix: &str, p: &'a LstmParams, out: &mut Vec<Block<'a>>) {
    for (suffix, shape, data) in [
        ("w_x", p.w_x.shape(), p.w_x.as_slice()),
        ("w_h", p.w_h.shape(), p.w_h.as_slice()),
        ("b", p.b.shape(), p.b.as_slice()),
    ] {
        out.push(Block { name: format!("{prefix}.{suffix}"), shape: shape.to_vec(), data: data.expect("standard layout") });
    }
}

fn lstm_blocks_mut<'a>(prefix: &str, p: &'a mut LstmParams, out: &mut Vec<(String, &'a mut [f64])>) {
    out.push((format!("{prefix}.w_x"), p.w_x.as_slice_mut().expect("standard layout")));
    out.push((format!("{prefix}.w_h"), p.w_h.as_slice_mut().expect("standard layout")));
    out.push((format!("{prefix}.b"), p.b.as_slice_mut().expect("standard layout")));
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig, input_dim: usize) -> Self {
        let h = cfg.hidden;
        let mut widths = vec![cfg.feature_width()];
        widths.extend(&cfg.dense_sizes);
        Parameters {
            slice: BiLstmParams::zeros(input_dim, h),
            stmt: cfg.use_stmt_branch.then(|| BiLstmParams::zeros(input_dim, h)),
            dense: widths.windows(2).map(|w| DenseParams::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn init(cfg: &ModelConfig, input_dim: usize) -> Self {
        let mut rng = substream(cfg.seed, "init");
        let h = cfg.hidden;
        let bi = |rng: &mut ChaCha8Rng| BiLstmParams {
            fwd: LstmParams::init(input_dim, h, rng),
            bwd: LstmParams::init(input_dim, h, rng),
        };
        let slice = bi(&mut rng);
        let stmt = cfg.use_stmt_branch.then(|| bi(&mut rng));
        let mut widths = vec![cfg.feature_width()];
        widths.extend(&cfg.dense_sizes);
        let dense = widths.windows(2).map(|w| DenseParams::init(w[0], w[1], &mut rng)).collect();
        Parameters { slice, stmt, dense }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, d) in z.blocks_mut() {
            d.fill(0.0);
        }
        z
    }

    /// Every parameter block with a stable name, in a fixed order.
    pub fn blocks(&self) -> Vec<Block<'_>> {
        let mut out = Vec::new();
        lstm_blocks("slice.fwd", &self.slice.fwd, &mut out);
        lstm_blocks("slice.bwd", &self.slice.bwd, &mut out);
        if let Some(s) = &self.stmt {
            lstm_blocks("stmt.fwd", &s.fwd, &mut out);
            lstm_blocks("stmt.bwd", &s.bwd, &mut out);
        }
        for (j, d) in self.dense.iter().enumerate() {
            out.push(Block { name: format!("dense{j}.w"), shape: d.w.shape().to_vec(), data: d.w.as_slice().expect("standard layout") });
            out.push(Block { name: format!("dense{j}.b"), shape: d.b.shape().to_vec(), data: d.b.as_slice().expect("standard layout") });
        }
        out
    }

    /// Same order as [`Parameters::blocks`].
    pub fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        let Parameters { slice, stmt, dense } = self;
        lstm_blocks_mut("slice.fwd", &mut slice.fwd, &mut out);
        lstm_blocks_mut("slice.bwd", &mut slice.bwd, &mut out);
        if let Some(s) = stmt {
            lstm_blocks_mut("stmt.fwd", &mut s.fwd, &mut out);
            lstm_blocks_mut("stmt.bwd", &mut s.bwd, &mut out);
        }
        for (j, d) in dense.iter_mut().enumerate() {
            out.push((format!("dense{j}.w"), d.w.as_slice_mut().expect("standard layout")));
            out.push((format!("dense{j}.b"), d.b.as_slice_mut().expect("standard layout")));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn global_norm(&self) -> f64 {
        self.blocks().iter().flat_map(|b| b.data.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, d) in self.blocks_mut() {
            d.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerModel {
    pub config: ModelConfig,
    pub input_dim: usize,
    pub params: Parameters,
}

impl RankerModel {
    pub fn new(config: ModelConfig, input_dim: usize) -> Self {
        let params = Parameters::init(&config, input_dim);
        RankerModel { config, input_dim, params }
    }

    pub fn zeros(config: ModelConfig, input_dim: usize) -> Self {
        let params = Parameters::zeros(&config, input_dim);
        RankerModel { config, input_dim, params }
    }
}

/// Embedded, masked inputs for a minibatch. `labels` may be empty at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub slice: Array3<f64>,
    pub slice_mask: Array2<bool>,
    pub stmt: Array3<f64>,
    pub stmt_mask: Array2<bool>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.slice.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct BranchTrace {
    fwd: LstmTrace,
    bwd: LstmTrace,
    arg: Array2<usize>,
    steps: usize,
}

struct DenseTrace {
    /// input after dropout
    input: Array2<f64>,
    mask: Option<Array2<f64>>,
    pre: Array2<f64>,
}

struct Trace {
    slice: BranchTrace,
    stmt: Option<BranchTrace>,
    dense: Vec<DenseTrace>,
    logits: Array2<f64>,
}

fn branch_forward(
    x: &Array3<f64>,
    mask: &Array2<bool>,
    p: &BiLstmParams,
) -> Result<(Array2<f64>, BranchTrace), NeuralError> {
    let (hf, fwd) = lstm_forward(x.view(), &p.fwd, false);
    let (hb, bwd) = lstm_forward(x.view(), &p.bwd, true);
    let hs = concatenate(Axis(2), &[hf.view(), hb.view()]).expect("equal shapes");
    let (pooled, arg) = global_max_pool(hs.view(), mask.view())?;
    Ok((pooled, BranchTrace { fwd, bwd, arg, steps: x.dim().1 }))
}

fn branch_backward(
    x: &Array3<f64>,
    p: &BiLstmParams,
    t: &BranchTrace,
    d_pooled: ndarray::ArrayView2<f64>,
) -> (BiLstmParams, Array3<f64>) {
    let h = p.fwd.hidden();
    let dh = global_max_pool_backward(d_pooled, &t.arg, t.steps);
    let (gf, dxf) = lstm_backward(x.view(), &p.fwd, &t.fwd, dh.slice(s![.., .., ..h]));
    let (gb, dxb) = lstm_backward(x.view(), &p.bwd, &t.bwd, dh.slice(s![.., .., h..]));
    (BiLstmParams { fwd: gf, bwd: gb }, dxf + dxb)
}

fn forward_trace(model: &RankerModel, batch: &Batch, mut dropout: Option<&mut ChaCha8Rng>) -> Result<Trace, NeuralError> {
    let p = &model.params;
    let (pooled, slice) = branch_forward(&batch.slice, &batch.slice_mask, &p.slice)?;
    let (mut x, stmt) = match &p.stmt {
        Some(sp) => {
            let (sp_pooled, st) = branch_forward(&batch.stmt, &batch.stmt_mask, sp)?;
            (concatenate(Axis(1), &[pooled.view(), sp_pooled.view()]).expect("equal rows"), Some(st))
        }
        None => (pooled, None),
    };
    let last = p.dense.len() - 1;
    let mut dense = Vec::with_capacity(p.dense.len());
    for (j, layer) in p.dense.iter().enumerate() {
        let mask = match dropout.as_deref_mut() {
            Some(rng) if model.config.dropout > 0.0 => Some(dropout_mask(x.dim(), model.config.dropout, rng)),
            _ => None,
        };
        let input = match &mask {
            Some(m) => &x * m,
            None => x,
        };
        let pre = layer.forward(&input);
        x = if j == last { pre.clone() } else { pre.mapv(|v| v.max(0.0)) };
        dense.push(DenseTrace { input, mask, pre });
    }
    Ok(Trace { slice, stmt, dense, logits: x })
}

/// `(batch, 2)` probabilities; rows are `(p_tp, p_fp)`. Passing an RNG turns
/// on training-mode dropout.
pub fn forward(model: &RankerModel, batch: &Batch, dropout: Option<&mut ChaCha8Rng>) -> Result<Array2<f64>, NeuralError> {
    Ok(softmax(&forward_trace(model, batch, dropout)?.logits))
}

pub struct LossAndGrads {
    pub loss: f64,
    pub grads: Parameters,
    /// gradients with respect to the embedded inputs
    pub d_slice: Array3<f64>,
    pub d_stmt: Option<Array3<f64>>,
}

/// Mean cross-entropy over the batch and its full gradient.
pub fn loss_and_grads(
    model: &RankerModel,
    batch: &Batch,
    dropout: Option<&mut ChaCha8Rng>,
) -> Result<LossAndGrads, NeuralError> {
    if batch.labels.len() != batch.len() {
        return Err(NeuralError::Unlabeled);
    }
    let trace = forward_trace(model, batch, dropout)?;
    let loss = cross_entropy(&trace.logits, &batch.labels);
    let n = batch.len() as f64;
    let mut d = softmax(&trace.logits);
    for (mut row, &y) in d.axis_iter_mut(Axis(0)).zip(&batch.labels) {
        row[y] -= 1.0;
        row.mapv_inplace(|v| v / n);
    }
    let p = &model.params;
    let mut dense_grads = Vec::with_capacity(p.dense.len());
    for (j, (layer, t)) in p.dense.iter().zip(&trace.dense).enumerate().rev() {
        if j + 1 < p.dense.len() {
            d.zip_mut_with(&t.pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
        }
        dense_grads.push(super::layers::DenseParams { w: t.input.t().dot(&d), b: d.sum_axis(Axis(0)) });
        d = d.dot(&layer.w.t());
        if let Some(m) = &t.mask {
            d *= m;
        }
    }
    dense_grads.reverse();
    let w = 2 * model.config.hidden;
    let (slice_grads, d_slice) = branch_backward(&batch.slice, &p.slice, &trace.slice, d.slice(s![.., ..w]));
    let (stmt_grads, d_stmt) = match (&p.stmt, &trace.stmt) {
        (Some(sp), Some(st)) => {
            let (g, dx) = branch_backward(&batch.stmt, sp, st, d.slice(s![.., w..]));
            (Some(g), Some(dx))
        }
        _ => (None, None),
    };
    Ok(LossAndGrads { loss, grads: Parameters { slice: slice_grads, stmt: stmt_grads, dense: dense_grads }, d_slice, d_stmt })
}
