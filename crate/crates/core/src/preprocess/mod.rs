//! Identifier abstraction, tokenization, length fitting and vocabularies.

pub mod abstraction;
pub mod cache;
pub mod fit;
pub mod vocab;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use abstraction::{abstract_identifiers, AbstractionTable, CHAR_LIT, NUMBER_LIT, STRING_LIT};
pub use cache::{read_cache, write_cache, CacheError, CacheHeader};
pub use fit::{fit_length, CapacityError, TokenSequence, PAD, UNK};
pub use vocab::{build_vocab, Vocabulary, PAD_ID, UNK_ID};

use crate::dependence::SystemDependenceGraph;
use crate::frontend::effects::library_allowlist;
use crate::frontend::{lex, LexError};
use crate::slicer::{extract_context, ContextMode, SliceError, WarningContext};
use crate::warnings::{Dataset, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub l_slice: usize,
    pub l_stmt: usize,
    pub abstraction_on: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { l_slice: 600, l_stmt: 40, abstraction_on: true }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.l_stmt == 0 || self.l_slice < self.l_stmt {
            return Err(format!("need l_slice >= l_stmt >= 1, got l_slice={} l_stmt={}", self.l_slice, self.l_stmt));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error("warning {id}: {err}")]
    Lex { id: String, err: LexError },
    #[error("warning {id} ({which}): {err}")]
    Capacity { id: String, which: &'static str, err: CapacityError },
}

/// Both model inputs for one warning, still as token strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedWarning {
    pub id: String,
    pub label: Option<Label>,
    pub context: TokenSequence,
    pub stmt: TokenSequence,
}

pub fn default_allowlist() -> BTreeSet<String> {
    library_allowlist().map(str::to_string).collect()
}

/// Lexes each statement and concatenates the tokens, recording per-statement spans.
pub fn tokenize_context<S: AsRef<str>>(statements: &[S]) -> Result<(Vec<String>, Vec<(usize, usize)>), LexError> {
    let mut tokens = Vec::new();
    let mut spans = Vec::with_capacity(statements.len());
    for s in statements {
        let start = tokens.len();
        tokens.extend(lex(s.as_ref())?.into_iter().map(|t| t.text));
        spans.push((start, tokens.len()));
    }
    Ok((tokens, spans))
}

/// Abstraction (if enabled), tokenization and fitting for an extracted context.
pub fn prepare_context(
    sdg: &SystemDependenceGraph,
    ctx: &WarningContext,
    cfg: &PreprocessConfig,
    allowlist: &BTreeSet<String>,
) -> Result<PreparedWarning, PreprocessError> {
    let id = &ctx.warning.id;
    let lex_err = |err| PreprocessError::Lex { id: id.clone(), err };
    let raw = ctx.texts(sdg);
    let texts: Vec<String> = if cfg.abstraction_on {
        abstract_identifiers(&raw, allowlist).map_err(lex_err)?.0
    } else {
        raw.iter().map(|s| s.to_string()).collect()
    };
    let reported = ctx.reported_index();
    let (tokens, spans) = tokenize_context(&texts).map_err(lex_err)?;
    let context = fit_length(&tokens, &spans, reported, cfg.l_slice)
        .map_err(|err| PreprocessError::Capacity { id: id.clone(), which: "context", err })?;
    let stmt_tokens = tokens[spans[reported].0..spans[reported].1].to_vec();
    let n = stmt_tokens.len();
    let stmt = fit_length(&stmt_tokens, &[(0, n)], 0, cfg.l_stmt)
        .map_err(|err| PreprocessError::Capacity { id: id.clone(), which: "statement", err })?;
    Ok(PreparedWarning { id: id.clone(), label: ctx.warning.label, context, stmt })
}

/// Extracts and prepares every warning of `dataset`, in dataset order.
pub fn prepare_dataset(
    sdg: &SystemDependenceGraph,
    dataset: &Dataset,
    mode: ContextMode,
    cfg: &PreprocessConfig,
) -> Result<Vec<PreparedWarning>, PreprocessError> {
    let allow = default_allowlist();
    dataset
        .warnings
        .iter()
        .map(|w| {
            let ctx = extract_context(sdg, w, mode)?;
            prepare_context(sdg, &ctx, cfg, &allow)
        })
        .collect()
}

/// Vocabulary over the context and statement tokens of `training`.
pub fn vocab_for(training: &[&PreparedWarning]) -> Vocabulary {
    build_vocab(training.iter().flat_map(|p| [&p.context.tokens[..], &p.stmt.tokens[..]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::build_sdg;
    use crate::frontend::parse_source;
    use crate::warnings::detect_bo;

    #[test]
    fn two_statements_spans() {
        let (t, s) = tokenize_context(&["return a;", "x = 1;"]).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(s, vec![(0, 3), (3, 7)]);
    }

    #[test]
    fn seven_tokens() {
        let (t, s) = tokenize_context(&["strcat(VAR8, VAR11);"]).unwrap();
        assert_eq!(t, ["strcat", "(", "VAR8", ",", "VAR11", ")", ";"]);
        assert_eq!(s, vec![(0, 7)]);
    }

    #[test]
    fn config_validation() {
        assert!(PreprocessConfig::default().validate().is_ok());
        assert!(PreprocessConfig { l_slice: 4, l_stmt: 5, abstraction_on: true }.validate().is_err());
        assert!(PreprocessConfig { l_slice: 4, l_stmt: 0, abstraction_on: true }.validate().is_err());
    }

    #[test]
    fn prepared_warning_shapes() {
        let src = "void f(char *s) {\n  char b[8];\n  int n = 0;\n  strcpy(b, s);\n  n = n + 1;\n}\n";
        let u = parse_source(src, "t.mc").unwrap();
        let mut ds = Dataset { warnings: detect_bo(&u), ..Default::default() };
        ds.warnings[0].label = Some(Label::TruePositive);
        let sdg = build_sdg(&[u]).unwrap();
        let cfg = PreprocessConfig { l_slice: 20, l_stmt: 8, abstraction_on: true };
        let p = &prepare_dataset(&sdg, &ds, ContextMode::RawFunction, &cfg).unwrap()[0];
        assert_eq!(p.context.capacity(), 20);
        assert_eq!(p.stmt.capacity(), 8);
        assert_eq!(&p.stmt.tokens[..7], ["strcpy", "(", "VAR1", ",", "VAR3", ")", ";"]);
        let flat = prepare_dataset(&sdg, &ds, ContextMode::RawFunction, &PreprocessConfig { abstraction_on: false, ..cfg }).unwrap();
        assert_eq!(flat[0].stmt.tokens[2], "b");
    }
}
