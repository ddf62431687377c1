//! Model checkpoint layout (integers little-endian):
//!
//! | bytes   | content                                                   |
//! |---------|-----------------------------------------------------------|
//! | 8       | magic `WRKMDL\0\0`                                        |
//! | 4 (u32) | format version (1)                                        |
//! | 4 (u32) | n, length of the JSON header                              |
//! | n       | [`CheckpointHeader`]                                      |
//! | rest    | `f64` values of every listed block, in header order       |
//!
//! Blocks are the model parameters followed by the optimizer's first moments
//! (`adamax.m/<name>`) and infinity norms (`adamax.u/<name>`), each row-major.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adamax::{AdamaxConfig, AdamaxState};
use super::model::{Parameters, RankerModel};
use super::train::TrainState;
use super::ModelConfig;

pub const MAGIC: &[u8; 8] = b"WRKMDL\0\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelCheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub input_dim: usize,
    pub seed: u64,
    pub epoch: usize,
    pub epoch_losses: Vec<f64>,
    pub optimizer: AdamaxConfig,
    pub optimizer_step: u64,
    pub blocks: Vec<BlockInfo>,
}

pub fn encode_state(state: &TrainState) -> Vec<u8> {
    let params = state.model.params.blocks();
    let mut blocks: Vec<BlockInfo> =
        params.iter().map(|b| BlockInfo { name: b.name.clone(), shape: b.shape.clone() }).collect();
    for prefix in ["adamax.m", "adamax.u"] {
        blocks.extend(params.iter().map(|b| BlockInfo { name: format!("{prefix}/{}", b.name), shape: b.shape.clone() }));
    }
    let header = CheckpointHeader {
        config: state.model.config.clone(),
        input_dim: state.model.input_dim,
        seed: state.seed,
        epoch: state.epoch,
        epoch_losses: state.epoch_losses.clone(),
        optimizer: state.optimizer.config,
        optimizer_step: state.optimizer.step,
        blocks,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let values = params
        .iter()
        .map(|b| b.data)
        .chain(state.optimizer.first_moment.iter().map(Vec::as_slice))
        .chain(state.optimizer.inf_norm.iter().map(Vec::as_slice));
    for block in values {
        for x in block {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_state(bytes: &[u8]) -> Result<TrainState, String> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err("not a model checkpoint".into());
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format!("unsupported model checkpoint version {version}"));
    }
    let n = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let json = bytes.get(16..16 + n).ok_or("truncated header")?;
    let header: CheckpointHeader = serde_json::from_slice(json).map_err(|e| e.to_string())?;
    header.config.validate()?;

    let mut model = RankerModel { params: Parameters::zeros(&header.config, header.input_dim), config: header.config, input_dim: header.input_dim };
    let expected: Vec<BlockInfo> =
        model.params.blocks().iter().map(|b| BlockInfo { name: b.name.clone(), shape: b.shape.clone() }).collect();
    let k = expected.len();
    if header.blocks.len() != 3 * k || header.blocks[..k] != expected[..] {
        return Err("parameter blocks do not match the model configuration".into());
    }
    let mut values = bytes[16 + n..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let total: usize = expected.iter().map(|b| b.shape.iter().product::<usize>()).sum();
    if bytes.len() - 16 - n != 8 * 3 * total {
        return Err("block data has the wrong length".into());
    }
    for (_, block) in model.params.blocks_mut() {
        block.iter_mut().for_each(|x| *x = values.next().expect("length checked"));
    }
    let mut take = |info: &BlockInfo| -> Vec<f64> { values.by_ref().take(info.shape.iter().product()).collect() };
    let first_moment = expected.iter().map(&mut take).collect();
    let inf_norm = expected.iter().map(&mut take).collect();
    let optimizer = AdamaxState { config: header.optimizer, step: header.optimizer_step, first_moment, inf_norm };
    Ok(TrainState { model, optimizer, seed: header.seed, epoch: header.epoch, epoch_losses: header.epoch_losses })
}

pub fn save_state(state: &TrainState, path: &Path) -> Result<(), ModelCheckpointError> {
    fs::write(path, encode_state(state)).map_err(|source| ModelCheckpointError::Io { path: path.to_path_buf(), source })
}

pub fn load_state(path: &Path) -> Result<TrainState, ModelCheckpointError> {
    let bytes = fs::read(path).map_err(|source| ModelCheckpointError::Io { path: path.to_path_buf(), source })?;
    decode_state(&bytes).map_err(|message| ModelCheckpointError::Corrupt { path: path.to_path_buf(), message })
}
