//! Embedding checkpoint layout (all integers little-endian):
//!
//! | bytes      | content                                   |
//! |------------|-------------------------------------------|
//! | 8          | magic `WRKEMB\0\0`                        |
//! | 4 (u32)    | format version (1)                        |
//! | 8 (u64)    | V, rows                                   |
//! | 8 (u64)    | d, columns                                |
//! | 8 (u64)    | training seed                             |
//! | 4 (u32)    | n, length of the config JSON              |
//! | n          | `CbowConfig` as JSON                      |
//! | 8·V·d      | row-major `f64` values                    |

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use thiserror::Error;

use super::{CbowConfig, EmbeddingMatrix};

pub const MAGIC: &[u8; 8] = b"WRKEMB\0\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

pub fn encode_embedding(m: &EmbeddingMatrix) -> Vec<u8> {
    let config = serde_json::to_vec(&m.config).expect("config serializes");
    let mut b = Vec::with_capacity(48 + config.len() + 8 * m.vectors.len());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.extend_from_slice(&(m.vocab_size() as u64).to_le_bytes());
    b.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    b.extend_from_slice(&m.config.seed.to_le_bytes());
    b.extend_from_slice(&(config.len() as u32).to_le_bytes());
    b.extend_from_slice(&config);
    for x in m.vectors.iter() {
        b.extend_from_slice(&x.to_le_bytes());
    }
    b
}

pub fn decode_embedding(bytes: &[u8]) -> Result<EmbeddingMatrix, String> {
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8], String> {
        let s = bytes.get(at..at + n).ok_or("truncated embedding checkpoint")?;
        at += n;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err("not an embedding checkpoint".into());
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
    let version = u32_at(take(4)?);
    if version != VERSION {
        return Err(format!("unsupported embedding checkpoint version {version}"));
    }
    let v = u64_at(take(8)?) as usize;
    let d = u64_at(take(8)?) as usize;
    let _seed = u64_at(take(8)?);
    let n = u32_at(take(4)?) as usize;
    let config: CbowConfig = serde_json::from_slice(take(n)?).map_err(|e| e.to_string())?;
    let data = take(8 * v * d)?;
    let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let vectors = Array2::from_shape_vec((v, d), values).map_err(|e| e.to_string())?;
    Ok(EmbeddingMatrix { vectors, config })
}

pub fn save_embedding(m: &EmbeddingMatrix, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, encode_embedding(m)).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })
}

pub fn load_embedding(path: &Path) -> Result<EmbeddingMatrix, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
    decode_embedding(&bytes).map_err(|message| CheckpointError::Corrupt { path: path.to_path_buf(), message })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = EmbeddingMatrix {
            vectors: Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - 0.25 * j as f64),
            config: CbowConfig { dim: 2, seed: 9, ..CbowConfig::default() },
        };
        let bytes = encode_embedding(&m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(decode_embedding(&bytes).unwrap(), m);
        assert!(decode_embedding(&bytes[..bytes.len() - 1]).is_err());
    }
}
