use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumberLiteral,
    StringLiteral,
    CharLiteral,
    Operator,
    Punctuation,
}

/// One lexical token together with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexToken {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
    /// Byte offset of the first character in the lexed source.
    pub offset: usize,
}

impl LexToken {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

impl fmt::Display for LexToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} `{}` at {}:{}", self.kind, self.text, self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unrecognized character {ch:?} at {line}:{col}")]
    UnexpectedChar { ch: char, line: u32, col: u32 },
    #[error("unterminated {what} starting at {line}:{col}")]
    Unterminated { what: &'static str, line: u32, col: u32 },
}

pub const KEYWORDS: &[&str] = &[
    "int", "char", "void", "if", "else", "while", "for", "return", "NULL",
];

// Longest match first.
const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "+", "-", "*", "/", "%", "=",
    "<", ">", "!", "&",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ','];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits mini-C source into tokens, dropping whitespace and comments.
pub fn lex(source: &str) -> Result<Vec<LexToken>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (line, col, start) = (cur.line, cur.col, cur.pos);

        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.peek() {
                    None => return Err(LexError::Unterminated { what: "comment", line, col }),
                    Some('*') if cur.peek_at(1) == Some('/') => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    Some(_) => {
                        cur.bump();
                    }
                }
            }
            continue;
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            if is_keyword(&source[start..cur.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric()) {
                cur.bump();
            }
            TokenKind::NumberLiteral
        } else if c == '"' || c == '\'' {
            let quote = c;
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        let what = if quote == '"' { "string literal" } else { "char literal" };
                        return Err(LexError::Unterminated { what, line, col });
                    }
                    Some('\\') => {
                        cur.bump();
                    }
                    Some(c) if c == quote => break,
                    Some(_) => {}
                }
            }
            if quote == '"' {
                TokenKind::StringLiteral
            } else {
                TokenKind::CharLiteral
            }
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(*op)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            TokenKind::Operator
        } else {
            return Err(LexError::UnexpectedChar { ch: c, line, col });
        };

        out.push(LexToken {
            kind,
            text: source[start..cur.pos].to_string(),
            line,
            col,
            offset: start,
        });
    }
    Ok(out)
}
