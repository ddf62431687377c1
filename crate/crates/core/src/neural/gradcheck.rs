//! Central finite-difference check of [`loss_and_grads`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{loss_and_grads, Batch, RankerModel};
use super::NeuralError;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// worst relative error and the block it occurred in
    pub max_relative_error: f64,
    pub worst_block: String,
    pub checked: usize,
}

fn input(b: &mut Batch, stmt: bool) -> &mut ndarray::Array3<f64> {
    if stmt {
        &mut b.stmt
    } else {
        &mut b.slice
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-7)
}

/// Compares every parameter (and every embedded input) against
/// `(loss(θ+ε) − loss(θ−ε)) / 2ε`. Dropout masks are redrawn from
/// `dropout_seed` for each evaluation so all passes see the same masks.
pub fn check_gradients(model: &RankerModel, batch: &Batch, dropout_seed: Option<u64>, eps: f64) -> Result<GradCheck, NeuralError> {
    let rng = || dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let loss = |m: &RankerModel, b: &Batch| -> Result<f64, NeuralError> { Ok(loss_and_grads(m, b, rng().as_mut())?.loss) };
    let analytic = loss_and_grads(model, batch, rng().as_mut())?;
    let mut report = GradCheck { max_relative_error: 0.0, worst_block: String::new(), checked: 0 };
    let mut note = |name: &str, a: f64, n: f64| {
        let r = relative(a, n);
        report.checked += 1;
        if r > report.max_relative_error {
            report.max_relative_error = r;
            report.worst_block = name.to_string();
        }
    };

    let grads: Vec<(String, Vec<f64>)> = analytic.grads.blocks().iter().map(|b| (b.name.clone(), b.data.to_vec())).collect();
    let mut probe = model.clone();
    for (bi, (name, g)) in grads.iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            let orig = probe.params.blocks_mut()[bi].1[i];
            probe.params.blocks_mut()[bi].1[i] = orig + eps;
            let up = loss(&probe, batch)?;
            probe.params.blocks_mut()[bi].1[i] = orig - eps;
            let down = loss(&probe, batch)?;
            probe.params.blocks_mut()[bi].1[i] = orig;
            note(name, a, (up - down) / (2.0 * eps));
        }
    }

    let mut inputs = vec![("input.slice", false, &analytic.d_slice)];
    if let Some(d) = &analytic.d_stmt {
        inputs.push(("input.stmt", true, d));
    }
    for (name, stmt, d) in inputs {
        let mut b = batch.clone();
        for (idx, &a) in d.indexed_iter() {
            let orig = input(&mut b, stmt)[idx];
            input(&mut b, stmt)[idx] = orig + eps;
            let up = loss(model, &b)?;
            input(&mut b, stmt)[idx] = orig - eps;
            let down = loss(model, &b)?;
            input(&mut b, stmt)[idx] = orig;
            note(name, a, (up - down) / (2.0 * eps));
        }
    }
    Ok(report)
}
