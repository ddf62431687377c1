//! Mini-C front end: lexing, parsing, statement-level CFGs and corpus loading.

pub mod ast;
pub mod cfg;
pub mod corpus;
pub mod effects;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::{FunctionAst, Stmt, StmtId, StmtKind, TranslationUnit};
pub use cfg::{build_cfg, Cfg, CfgError};
pub use corpus::{Corpus, CorpusEntry, CorpusError, CorpusManifest};
pub use lexer::{lex, LexError, LexToken, TokenKind};
pub use parser::{parse, ParseError};
pub use pretty::pretty_print;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{source_id}: {err}")]
    Lex { source_id: String, err: LexError },
    #[error("{source_id}: {err}")]
    Parse { source_id: String, err: ParseError },
}

/// Lexes and parses one source file.
pub fn parse_source(source: &str, source_id: &str) -> Result<TranslationUnit, FrontendError> {
    let tokens = lex(source).map_err(|err| FrontendError::Lex { source_id: source_id.into(), err })?;
    parse(&tokens, source_id).map_err(|err| FrontendError::Parse { source_id: source_id.into(), err })
}
