//! Dual-branch BiLSTM ranker with hand-written backpropagation.

pub mod adamax;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod lstm;
pub mod model;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adamax::{AdamaxConfig, AdamaxState};
pub use checkpoint::{load_state, save_state, ModelCheckpointError};
pub use layers::global_max_pool;
pub use lstm::{bilstm, lstm_forward, LstmParams};
pub use model::{forward, loss_and_grads, Batch, LossAndGrads, Parameters, RankerModel, FP_CLASS, TP_CLASS};
pub use train::{encode_warning, make_batch, predict, train, train_until, EncodedWarning, TrainConfig, TrainState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NeuralError {
    #[error("batch row {row} has no unmasked positions")]
    AllMasked { row: usize },
    #[error("batch has no labels")]
    Unlabeled,
    #[error("warning {0} has no label")]
    UnlabeledWarning(String),
    #[error("empty training set")]
    EmptyTrainingSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// LSTM units per direction.
    pub hidden: usize,
    /// Dense layer widths; the last must be 2.
    pub dense_sizes: Vec<usize>,
    pub dropout: f64,
    pub use_stmt_branch: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { hidden: 256, dense_sizes: vec![256, 64, 2], dropout: 0.1, use_stmt_branch: true, seed: 0 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden == 0 {
            return Err("hidden must be >= 1".into());
        }
        if self.dense_sizes.last() != Some(&2) || self.dense_sizes.contains(&0) {
            return Err(format!("dense_sizes must be positive and end in 2, got {:?}", self.dense_sizes));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }

    /// Width of the pooled features fed to the first dense layer.
    pub fn feature_width(&self) -> usize {
        if self.use_stmt_branch {
            4 * self.hidden
        } else {
            2 * self.hidden
        }
    }
}

#[cfg(test)]
mod tests;
