//! Prepared-dataset cache.
//!
//! Line-delimited JSON. Line 1 is a [`CacheHeader`] holding the format tag,
//! version, settings and a token table; token ids in the records index that
//! table (it is an interning table, not a model vocabulary, which is built per
//! fold). Every further line is one warning:
//!
//! ```text
//! {"id":"a.mc:12:BO","label":"TP",
//!  "context":{"ids":[...],"mask":"111000","spans":[[0,3]],"kept":[4],"reported":0},
//!  "stmt":{...}}
//! ```
//!
//! `mask` is a string of `1`/`0` characters. The file depends only on the
//! inputs, so equal settings produce identical bytes.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PreparedWarning, PreprocessConfig, TokenSequence};
use crate::slicer::ContextMode;
use crate::warnings::Label;

pub const CACHE_FORMAT: &str = "warnrank-prepared";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub format: String,
    pub version: u32,
    pub mode: ContextMode,
    pub config: PreprocessConfig,
    pub corpus_hash: String,
    pub tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SeqRecord {
    ids: Vec<u32>,
    mask: String,
    spans: Vec<(usize, usize)>,
    kept: Vec<usize>,
    reported: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    label: Option<Label>,
    context: SeqRecord,
    stmt: SeqRecord,
}

fn intern(seq: &TokenSequence, table: &mut Vec<String>, index: &mut HashMap<String, u32>) -> SeqRecord {
    let ids = seq
        .tokens
        .iter()
        .map(|t| {
            *index.entry(t.clone()).or_insert_with(|| {
                table.push(t.clone());
                (table.len() - 1) as u32
            })
        })
        .collect();
    SeqRecord {
        ids,
        mask: seq.mask.iter().map(|&m| if m { '1' } else { '0' }).collect(),
        spans: seq.stmt_spans.clone(),
        kept: seq.kept.clone(),
        reported: seq.reported,
    }
}

fn restore(r: SeqRecord, table: &[String]) -> Result<TokenSequence, String> {
    let tokens = r
        .ids
        .iter()
        .map(|&i| table.get(i as usize).cloned().ok_or_else(|| format!("token id {i} out of range")))
        .collect::<Result<Vec<_>, _>>()?;
    let mask = r
        .mask
        .chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(format!("bad mask character {c:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if mask.len() != tokens.len() {
        return Err("mask and token lengths differ".into());
    }
    Ok(TokenSequence { tokens, mask, stmt_spans: r.spans, kept: r.kept, reported: r.reported })
}

pub fn write_cache(
    path: &Path,
    mode: ContextMode,
    config: &PreprocessConfig,
    corpus_hash: &str,
    warnings: &[PreparedWarning],
) -> Result<(), CacheError> {
    let io = |source| CacheError::Io { path: path.to_path_buf(), source };
    let mut table = Vec::new();
    let mut index = HashMap::new();
    let records: Vec<Record> = warnings
        .iter()
        .map(|w| Record {
            id: w.id.clone(),
            label: w.label,
            context: intern(&w.context, &mut table, &mut index),
            stmt: intern(&w.stmt, &mut table, &mut index),
        })
        .collect();
    let header = CacheHeader {
        format: CACHE_FORMAT.into(),
        version: CACHE_VERSION,
        mode,
        config: *config,
        corpus_hash: corpus_hash.into(),
        tokens: table,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
    for r in &records {
        writeln!(out, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_cache(path: &Path) -> Result<(CacheHeader, Vec<PreparedWarning>), CacheError> {
    let file = fs::File::open(path).map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
    let fmt = |line: usize, message: String| CacheError::Format { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| fmt(1, "empty cache file".into()))?
        .map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
    let header: CacheHeader = serde_json::from_str(&first).map_err(|e| fmt(1, e.to_string()))?;
    if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
        return Err(fmt(1, format!("unsupported cache {} v{}", header.format, header.version)));
    }
    let mut out = Vec::new();
    for (i, l) in lines.enumerate() {
        let l = l.map_err(|source| CacheError::Io { path: path.to_path_buf(), source })?;
        let r: Record = serde_json::from_str(&l).map_err(|e| fmt(i + 2, e.to_string()))?;
        out.push(PreparedWarning {
            id: r.id,
            label: r.label,
            context: restore(r.context, &header.tokens).map_err(|m| fmt(i + 2, m))?,
            stmt: restore(r.stmt, &header.tokens).map_err(|m| fmt(i + 2, m))?,
        });
    }
    Ok((header, out))
}
