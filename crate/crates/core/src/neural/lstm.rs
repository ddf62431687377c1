//! Batched LSTM with backpropagation through time.
//!
//! Gate layout along the `4h` axis is `[input | forget | candidate | output]`.
//! Inputs are `(batch, time, features)`.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// `d × 4h`
    pub w_x: Array2<f64>,
    /// `h × 4h`
    pub w_h: Array2<f64>,
    /// `4h`
    pub b: Array1<f64>,
}

pub(crate) fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-a..a))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmParams {
    pub fn zeros(d: usize, h: usize) -> Self {
        LstmParams { w_x: Array2::zeros((d, 4 * h)), w_h: Array2::zeros((h, 4 * h)), b: Array1::zeros(4 * h) }
    }

    /// Glorot-uniform weights, zero biases except the forget gate at +1.
    pub fn init<R: Rng>(d: usize, h: usize, rng: &mut R) -> Self {
        let mut b = Array1::zeros(4 * h);
        b.slice_mut(s![h..2 * h]).fill(1.0);
        LstmParams { w_x: glorot(d, 4 * h, rng), w_h: glorot(h, 4 * h, rng), b }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_h.nrows()
    }
}

/// Activations saved for the backward pass, time-major.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    reverse: bool,
    /// activated gates `(time, batch, 4h)`
    gates: Array3<f64>,
    cells: Array3<f64>,
    hidden: Array3<f64>,
}

fn order(l: usize, reverse: bool) -> impl DoubleEndedIterator<Item = usize> {
    (0..l).map(move |s| if reverse { l - 1 - s } else { s })
}

fn prev(t: usize, l: usize, reverse: bool) -> Option<usize> {
    if reverse {
        (t + 1 < l).then_some(t + 1)
    } else {
        t.checked_sub(1)
    }
}

/// Runs the recurrence from zero state. With `reverse` the sequence is read
/// back to front and outputs are stored at their original positions.
pub fn lstm_forward(x: ArrayView3<f64>, p: &LstmParams, reverse: bool) -> (Array3<f64>, LstmTrace) {
    let (b, l, d) = x.dim();
    let h = p.hidden();
    let xz = x.to_shape((b * l, d)).expect("reshape input").dot(&p.w_x);
    let xz = xz.into_shape_with_order((b, l, 4 * h)).expect("reshape pre-activations");
    let mut gates = Array3::zeros((l, b, 4 * h));
    let mut cells = Array3::zeros((l, b, h));
    let mut hidden = Array3::zeros((l, b, h));
    let mut h_prev = Array2::<f64>::zeros((b, h));
    let mut c_prev = Array2::<f64>::zeros((b, h));
    for t in order(l, reverse) {
        let mut z = h_prev.dot(&p.w_h);
        z += &xz.index_axis(Axis(1), t);
        z += &p.b;
        for bi in 0..b {
            let zr = z.row_mut(bi).into_slice().expect("contiguous");
            for k in 0..h {
                zr[k] = sigmoid(zr[k]);
                zr[h + k] = sigmoid(zr[h + k]);
                zr[2 * h + k] = zr[2 * h + k].tanh();
                zr[3 * h + k] = sigmoid(zr[3 * h + k]);
                let c = zr[h + k] * c_prev[[bi, k]] + zr[k] * zr[2 * h + k];
                c_prev[[bi, k]] = c;
                h_prev[[bi, k]] = zr[3 * h + k] * c.tanh();
            }
        }
        gates.index_axis_mut(Axis(0), t).assign(&z);
        cells.index_axis_mut(Axis(0), t).assign(&c_prev);
        hidden.index_axis_mut(Axis(0), t).assign(&h_prev);
    }
    let out = hidden.view().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
    (out, LstmTrace { reverse, gates, cells, hidden })
}

/// Gradients of the parameters and of the input, given `d_out` shaped like
/// the forward output.
pub fn lstm_backward(
    x: ArrayView3<f64>,
    p: &LstmParams,
    trace: &LstmTrace,
    d_out: ArrayView3<f64>,
) -> (LstmParams, Array3<f64>) {
    let (b, l, d) = x.dim();
    let h = p.hidden();
    let mut dz_all = Array3::<f64>::zeros((b, l, 4 * h));
    let mut grads = LstmParams::zeros(d, h);
    let mut dh_next = Array2::<f64>::zeros((b, h));
    let mut dc_next = Array2::<f64>::zeros((b, h));
    let zeros = Array2::<f64>::zeros((b, h));
    for t in order(l, trace.reverse).rev() {
        let tp = prev(t, l, trace.reverse);
        let c_prev: ArrayView2<f64> = tp.map_or(zeros.view(), |u| trace.cells.index_axis(Axis(0), u));
        let h_prev: ArrayView2<f64> = tp.map_or(zeros.view(), |u| trace.hidden.index_axis(Axis(0), u));
        let g = trace.gates.index_axis(Axis(0), t);
        let cells = trace.cells.index_axis(Axis(0), t);
        let mut dz = Array2::<f64>::zeros((b, 4 * h));
        for bi in 0..b {
            for k in 0..h {
                let (i, f, cand, o) = (g[[bi, k]], g[[bi, h + k]], g[[bi, 2 * h + k]], g[[bi, 3 * h + k]]);
                let tc = cells[[bi, k]].tanh();
                let dh = d_out[[bi, t, k]] + dh_next[[bi, k]];
                let dc = dc_next[[bi, k]] + dh * o * (1.0 - tc * tc);
                dz[[bi, k]] = dc * cand * i * (1.0 - i);
                dz[[bi, h + k]] = dc * c_prev[[bi, k]] * f * (1.0 - f);
                dz[[bi, 2 * h + k]] = dc * i * (1.0 - cand * cand);
                dz[[bi, 3 * h + k]] = dh * tc * o * (1.0 - o);
                dc_next[[bi, k]] = dc * f;
            }
        }
        grads.w_h += &h_prev.t().dot(&dz);
        grads.b += &dz.sum_axis(Axis(0));
        dh_next = dz.dot(&p.w_h.t());
        dz_all.slice_mut(s![.., t, ..]).assign(&dz);
    }
    let dz_flat = dz_all.into_shape_with_order((b * l, 4 * h)).expect("reshape gate grads");
    grads.w_x = x.to_shape((b * l, d)).expect("reshape input").t().dot(&dz_flat);
    let dx = dz_flat.dot(&p.w_x.t()).into_shape_with_order((b, l, d)).expect("reshape input grads");
    (grads, dx)
}

/// Forward and backward outputs concatenated per step: `(batch, time, 2h)`.
pub fn bilstm(x: ArrayView3<f64>, fwd: &LstmParams, bwd: &LstmParams) -> Array3<f64> {
    let (hf, _) = lstm_forward(x, fwd, false);
    let (hb, _) = lstm_forward(x, bwd, true);
    ndarray::concatenate(Axis(2), &[hf.view(), hb.view()]).expect("equal shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_everything_gives_zero_output() {
        let x = Array3::zeros((2, 4, 3));
        let (hs, _) = lstm_forward(x.view(), &LstmParams::zeros(3, 2), false);
        assert!(hs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_by_hand() {
        // d = 1, h = 2, x = 1; weights picked so every gate pre-activation is a small integer
        let p = LstmParams {
            w_x: array![[1.0, 0.0, 0.0, -1.0, 1.0, 2.0, 0.0, 1.0]],
            w_h: Array2::zeros((2, 8)),
            b: array![0.0, 1.0, 1.0, 0.0, 0.0, -1.0, 2.0, 0.0],
        };
        let x = Array3::from_elem((1, 1, 1), 1.0);
        let (hs, _) = lstm_forward(x.view(), &p, false);
        let sg = |z: f64| 1.0 / (1.0 + (-z).exp());
        // unit 0: i=σ(1) f=σ(1) g=tanh(1) o=σ(2); unit 1: i=σ(1) f=σ(-1) g=tanh(1) o=σ(1)
        let h0 = sg(2.0) * (sg(1.0) * 1f64.tanh()).tanh();
        let h1 = sg(1.0) * (sg(1.0) * 1f64.tanh()).tanh();
        assert!((hs[[0, 0, 0]] - h0).abs() < 1e-15);
        assert!((hs[[0, 0, 1]] - h1).abs() < 1e-15);
    }

    #[test]
    fn reverse_equals_forward_on_reversed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmParams::init(3, 4, &mut rng);
        let x = Array::from_shape_fn((2, 5, 3), |_| rng.gen_range(-1.0..1.0));
        let (back, _) = lstm_forward(x.view(), &p, true);
        let xr = x.slice(s![.., ..;-1, ..]);
        let (fwd, _) = lstm_forward(xr, &p, false);
        let fwd_rev = fwd.slice(s![.., ..;-1, ..]).to_owned();
        for (a, b) in back.iter().zip(fwd_rev.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn bilstm_width_and_palindrome_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = LstmParams::init(2, 1, &mut rng);
        assert_eq!(bilstm(Array3::zeros((1, 3, 2)).view(), &p, &p).dim(), (1, 3, 2));
        let p = LstmParams::init(2, 3, &mut rng);
        let x = array![[[0.3, -1.0], [0.7, 0.2], [-0.5, 0.9], [0.7, 0.2], [0.3, -1.0]]];
        let out = bilstm(x.view(), &p, &p);
        for t in 0..5 {
            for k in 0..3 {
                assert!((out[[0, t, k]] - out[[0, 4 - t, 3 + k]]).abs() < 1e-14);
            }
        }
    }
}
