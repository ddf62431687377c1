use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{lex, LexError, TokenKind};

pub const NUMBER_LIT: &str = "NUMBER_LIT";
pub const STRING_LIT: &str = "STRING_LIT";
pub const CHAR_LIT: &str = "CHAR_LIT";

/// Per-context symbol assignment. Indices start at 1 and follow first
/// occurrence over the context's statements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbstractionTable {
    pub var_map: BTreeMap<String, String>,
    pub func_map: BTreeMap<String, String>,
    pub allowlist: BTreeSet<String>,
}

impl AbstractionTable {
    pub fn is_empty(&self) -> bool {
        self.var_map.is_empty() && self.func_map.is_empty()
    }
}

/// `VAR<n>` / `FUNC<n>` already produced by an earlier abstraction pass.
fn symbol_index(name: &str) -> Option<(bool, usize)> {
    let (is_var, digits) = if let Some(d) = name.strip_prefix("VAR") {
        (true, d)
    } else {
        (false, name.strip_prefix("FUNC")?)
    };
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|n| (is_var, n))
}

fn is_reserved(name: &str) -> bool {
    matches!(name, NUMBER_LIT | STRING_LIT | CHAR_LIT) || symbol_index(name).is_some()
}

struct Numbering {
    taken: BTreeSet<usize>,
    next: usize,
}

impl Numbering {
    fn fresh(&mut self) -> usize {
        while self.taken.contains(&self.next) {
            self.next += 1;
        }
        self.taken.insert(self.next);
        self.next
    }
}

/// Rewrites user identifiers and literals into symbolic names, keeping the
/// original spacing. Library names in `allowlist`, keywords, operators and
/// punctuation are left alone, as are symbols that are already abstract.
pub fn abstract_identifiers<S: AsRef<str>>(
    statements: &[S],
    allowlist: &BTreeSet<String>,
) -> Result<(Vec<String>, AbstractionTable), LexError> {
    let lexed = statements.iter().map(|s| lex(s.as_ref())).collect::<Result<Vec<_>, _>>()?;

    let mut vars = Numbering { taken: BTreeSet::new(), next: 1 };
    let mut funcs = Numbering { taken: BTreeSet::new(), next: 1 };
    for t in lexed.iter().flatten().filter(|t| t.kind == TokenKind::Identifier) {
        if let Some((is_var, n)) = symbol_index(&t.text) {
            if is_var { &mut vars } else { &mut funcs }.taken.insert(n);
        }
    }

    let mut table = AbstractionTable { allowlist: allowlist.clone(), ..Default::default() };
    let mut out = Vec::with_capacity(statements.len());
    for (text, tokens) in statements.iter().map(AsRef::as_ref).zip(&lexed) {
        let mut s = String::with_capacity(text.len());
        let mut last = 0;
        for (i, t) in tokens.iter().enumerate() {
            let replacement = match t.kind {
                TokenKind::NumberLiteral => Some(NUMBER_LIT.to_string()),
                TokenKind::StringLiteral => Some(STRING_LIT.to_string()),
                TokenKind::CharLiteral => Some(CHAR_LIT.to_string()),
                TokenKind::Identifier if allowlist.contains(&t.text) || is_reserved(&t.text) => None,
                TokenKind::Identifier => {
                    let is_call = tokens.get(i + 1).is_some_and(|n| n.kind == TokenKind::Punctuation && n.text == "(");
                    let sym = if is_call {
                        table.func_map.entry(t.text.clone()).or_insert_with(|| format!("FUNC{}", funcs.fresh()))
                    } else {
                        table.var_map.entry(t.text.clone()).or_insert_with(|| format!("VAR{}", vars.fresh()))
                    };
                    Some(sym.clone())
                }
                _ => None,
            };
            if let Some(r) = replacement {
                s.push_str(&text[last..t.offset]);
                s.push_str(&r);
                last = t.offset + t.text.len();
            }
        }
        s.push_str(&text[last..]);
        out.push(s);
    }
    Ok((out, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::effects::library_allowlist;

    fn allow() -> BTreeSet<String> {
        library_allowlist().map(str::to_string).collect()
    }

    #[test]
    fn function_variable_and_size() {
        let (out, table) =
            abstract_identifiers(&["aoc_s_event(e);", "char prefix[32];"], &allow()).unwrap();
        assert_eq!(out, vec!["FUNC1(VAR1);", "char VAR2[NUMBER_LIT];"]);
        assert_eq!(table.func_map["aoc_s_event"], "FUNC1");
        assert_eq!(table.var_map["prefix"], "VAR2");
    }

    #[test]
    fn library_names_and_literals() {
        let (out, table) = abstract_identifiers(&["strcat(dst, \"/\");", "c = 'x';"], &allow()).unwrap();
        assert_eq!(out, vec!["strcat(VAR1, STRING_LIT);", "VAR2 = CHAR_LIT;"]);
        assert!(!table.func_map.contains_key("strcat"));
    }

    #[test]
    fn no_identifiers_no_change() {
        let (out, table) = abstract_identifiers(&["return;"], &allow()).unwrap();
        assert_eq!(out, vec!["return;"]);
        assert!(table.is_empty());
    }

    #[test]
    fn same_name_same_symbol() {
        let (out, _) = abstract_identifiers(&["a = b + a;", "b = a;"], &allow()).unwrap();
        assert_eq!(out, vec!["VAR1 = VAR2 + VAR1;", "VAR2 = VAR1;"]);
    }

    #[test]
    fn already_abstract_text_is_fixed_point() {
        let once = abstract_identifiers(&["x = f(y, 3);", "strcpy(x, \"a\");"], &allow()).unwrap().0;
        let twice = abstract_identifiers(&once, &allow()).unwrap().0;
        assert_eq!(once, twice);
    }

    #[test]
    fn existing_symbols_keep_their_index() {
        // a user name next to an existing VAR1 must not collapse into it
        let (out, _) = abstract_identifiers(&["VAR1 = x;"], &allow()).unwrap();
        assert_eq!(out, vec!["VAR1 = VAR2;"]);
        assert_eq!(symbol_index("VAR01"), None);
        assert_eq!(symbol_index("FUNC12"), Some((false, 12)));
    }
}
