use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::check_gradients;
use super::*;
use crate::embedding::{CbowConfig, EmbeddingMatrix};

fn tiny(seed: u64, stmt: bool) -> ModelConfig {
    ModelConfig { hidden: 3, dense_sizes: vec![5, 4, 2], dropout: 0.2, use_stmt_branch: stmt, seed }
}

fn random_batch(seed: u64, b: usize, l: usize, l_stmt: usize, d: usize) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slice_mask = Array2::from_elem((b, l), true);
    slice_mask[[0, l - 1]] = false;
    let mut stmt_mask = Array2::from_elem((b, l_stmt), true);
    stmt_mask[[b - 1, l_stmt - 1]] = false;
    Batch {
        slice: Array3::from_shape_fn((b, l, d), |_| rng.gen_range(-1.0..1.0)),
        slice_mask,
        stmt: Array3::from_shape_fn((b, l_stmt, d), |_| rng.gen_range(-1.0..1.0)),
        stmt_mask,
        labels: (0..b).map(|i| i % 2).collect(),
    }
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for seed in [11u64, 12, 13] {
        let model = RankerModel::new(tiny(seed, true), 4);
        let batch = random_batch(seed, 2, 5, 3, 4);
        let r = check_gradients(&model, &batch, Some(seed), 1e-5).unwrap();
        assert!(r.max_relative_error <= 1e-4, "seed {seed}: {r:?}");
        assert!(r.checked > model.params.len());
    }
}

#[test]
fn gradients_without_statement_branch() {
    let model = RankerModel::new(tiny(4, false), 4);
    let r = check_gradients(&model, &random_batch(4, 2, 5, 3, 4), None, 1e-5).unwrap();
    assert!(r.max_relative_error <= 1e-4, "{r:?}");
}

#[test]
fn single_step_sequence_gradients() {
    let model = RankerModel::new(ModelConfig { dropout: 0.0, ..tiny(8, true) }, 2);
    let mut batch = random_batch(8, 1, 1, 1, 2);
    batch.slice_mask.fill(true);
    batch.stmt_mask.fill(true);
    let r = check_gradients(&model, &batch, None, 1e-5).unwrap();
    assert!(r.max_relative_error <= 1e-4, "{r:?}");
}

#[test]
fn probabilities_sum_to_one() {
    let model = RankerModel::new(tiny(1, true), 4);
    let batch = random_batch(1, 3, 5, 3, 4);
    let p = forward(&model, &batch, None).unwrap();
    for row in p.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn zero_weights_are_uniform() {
    let model = RankerModel::zeros(tiny(1, true), 4);
    let batch = random_batch(2, 2, 5, 3, 4);
    let p = forward(&model, &batch, None).unwrap();
    assert!(p.iter().all(|&v| v == 0.5));
    let l = loss_and_grads(&model, &batch, None).unwrap().loss;
    assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn statement_branch_changes_feature_width() {
    assert_eq!(RankerModel::zeros(tiny(0, true), 4).params.dense[0].w.nrows(), 12);
    assert_eq!(RankerModel::zeros(tiny(0, false), 4).params.dense[0].w.nrows(), 6);
    assert!(RankerModel::zeros(tiny(0, false), 4).params.stmt.is_none());
}

#[test]
fn pad_content_does_not_matter() {
    let model = RankerModel::new(tiny(3, true), 4);
    // masked rows are zeroed while batching, so the backward LSTM never sees pad content
    let emb = EmbeddingMatrix {
        vectors: Array2::from_shape_fn((6, 4), |(i, j)| if i == 0 { 0.0 } else { (i * 4 + j) as f64 * 0.1 }),
        config: CbowConfig { dim: 4, ..CbowConfig::default() },
    };
    let w = |pad_token: u32| EncodedWarning {
        id: "w".into(),
        label: Some(crate::warnings::Label::TruePositive),
        slice: vec![2, 3, pad_token, pad_token],
        slice_mask: vec![true, true, false, false],
        stmt: vec![3, pad_token],
        stmt_mask: vec![true, false],
    };
    let (x, y) = (w(0), w(5));
    let (bx, by) = (make_batch(&[&x], &emb), make_batch(&[&y], &emb));
    assert_eq!(bx, by);
    let (gx, gy) = (loss_and_grads(&model, &bx, None).unwrap(), loss_and_grads(&model, &by, None).unwrap());
    assert_eq!(gx.grads, gy.grads);
}

#[test]
fn adamax_zero_gradient_is_a_no_op() {
    let model = RankerModel::new(tiny(1, true), 4);
    let mut params = model.params.clone();
    let mut opt = AdamaxState::new(&params, AdamaxConfig::default());
    opt.update(&mut params, &model.params.zeros_like());
    assert_eq!(params, model.params);
}

#[test]
fn adamax_first_three_steps_by_hand() {
    // one parameter, gradient fixed at 0.5, theta starts at 1
    let cfg = ModelConfig { hidden: 1, dense_sizes: vec![2], dropout: 0.0, use_stmt_branch: false, seed: 0 };
    let mut params = RankerModel::zeros(cfg, 1).params;
    let mut grads = params.zeros_like();
    grads.dense[0].b[0] = 0.5;
    params.dense[0].b[0] = 1.0;
    let mut opt = AdamaxState::new(&params, AdamaxConfig::default());
    // m1 = 0.05, u1 = 0.5, step = 0.002/0.1 * 0.05/0.5 = 0.002 (up to eps)
    // m2 = 0.095, u2 = 0.5, step = 0.002/0.19 * 0.095/0.5 = 0.002
    // m3 = 0.1355, u3 = 0.5, step = 0.002/0.271 * 0.1355/0.5 = 0.002
    let expected = [1.0 - 0.002 * 0.5 / (0.5 + 1e-8), 1.0 - 2.0 * 0.002 * 0.5 / (0.5 + 1e-8), 1.0 - 3.0 * 0.002 * 0.5 / (0.5 + 1e-8)];
    for e in expected {
        opt.update(&mut params, &grads);
        assert!((params.dense[0].b[0] - e).abs() < 1e-15, "{} vs {e}", params.dense[0].b[0]);
    }
    assert_eq!(opt.step, 3);
    assert!(opt.inf_norm.iter().flatten().all(|&u| u >= 0.0));
}

fn toy_embedding() -> EmbeddingMatrix {
    EmbeddingMatrix {
        vectors: Array2::from_shape_fn((6, 3), |(i, j)| if i == 0 { 0.0 } else { ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8 }),
        config: CbowConfig { dim: 3, ..CbowConfig::default() },
    }
}

fn toy_data() -> Vec<EncodedWarning> {
    use crate::warnings::Label;
    let w = |id: &str, tok: u32, label| EncodedWarning {
        id: id.into(),
        label: Some(label),
        slice: vec![tok, 1, tok, 0],
        slice_mask: vec![true, true, true, false],
        stmt: vec![tok, 0],
        stmt_mask: vec![true, false],
    };
    vec![w("a", 2, Label::TruePositive), w("b", 4, Label::FalsePositive)]
}

#[test]
fn separable_pair_is_learned() {
    let cfg = ModelConfig { hidden: 8, dense_sizes: vec![16, 8, 2], dropout: 0.0, use_stmt_branch: true, seed: 1 };
    let tc = TrainConfig { epochs: 200, batch_size: 1, ..TrainConfig::default() };
    let state = train(RankerModel::new(cfg, 3), &toy_data(), &toy_embedding(), &tc, 5).unwrap();
    assert!(*state.epoch_losses.last().unwrap() < 0.05, "{:?}", state.epoch_losses.last());
    let p = predict(&state.model, &toy_data(), &toy_embedding(), 8).unwrap();
    assert!(p[0] > 0.5 && p[1] < 0.5);
}

#[test]
fn training_is_deterministic_and_resumable() {
    let cfg = ModelConfig { hidden: 3, dense_sizes: vec![4, 2], dropout: 0.3, use_stmt_branch: true, seed: 2 };
    let tc = TrainConfig { epochs: 6, batch_size: 1, ..TrainConfig::default() };
    let (data, emb) = (toy_data(), toy_embedding());
    let a = train(RankerModel::new(cfg.clone(), 3), &data, &emb, &tc, 9).unwrap();
    let b = train(RankerModel::new(cfg.clone(), 3), &data, &emb, &tc, 9).unwrap();
    assert_eq!(a, b);

    let mut half = TrainState::new(RankerModel::new(cfg, 3), tc.optimizer, 9);
    train_until(&mut half, &data, &emb, &tc, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_state(&half, &path).unwrap();
    let mut resumed = load_state(&path).unwrap();
    assert_eq!(resumed, half);
    train_until(&mut resumed, &data, &emb, &tc, 6).unwrap();
    assert_eq!(resumed, a);
}

#[test]
fn unlabeled_training_data_is_rejected() {
    let mut data = toy_data();
    data[1].label = None;
    let err = train(RankerModel::new(tiny(0, true), 3), &data, &toy_embedding(), &TrainConfig::default(), 0).unwrap_err();
    assert_eq!(err, NeuralError::UnlabeledWarning("b".into()));
}

#[test]
fn config_validation() {
    assert!(ModelConfig::default().validate().is_ok());
    assert!(ModelConfig { dense_sizes: vec![4, 3], ..ModelConfig::default() }.validate().is_err());
    assert!(ModelConfig { dropout: 1.0, ..ModelConfig::default() }.validate().is_err());
    assert!(ModelConfig { hidden: 0, ..ModelConfig::default() }.validate().is_err());
}
