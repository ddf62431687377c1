use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::fit::{PAD, UNK};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

/// Dense token ids: `<pad>` = 0, `<unk>` = 1, then tokens by descending
/// frequency (ties by token text).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

/// Builds the vocabulary from training sequences; `<pad>` entries are ignored.
pub fn build_vocab<'a, I, S>(sequences: I) -> Vocabulary
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in sequences {
        for t in seq {
            let t = t.as_ref();
            if t != PAD && t != UNK {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let tokens = [PAD, UNK].into_iter().chain(ranked.into_iter().map(|(t, _)| t)).map(str::to_string).collect::<Vec<_>>();
    Vocabulary::from(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_plus_distinct_tokens() {
        let seq = ["a", "b", "a"];
        let v = build_vocab([&seq[..]]);
        assert_eq!(v.len(), 4);
        assert_eq!(v.id(PAD), PAD_ID);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("b"), 3);
        assert_eq!(v.id("never-seen"), UNK_ID);
    }

    #[test]
    fn pads_are_not_counted() {
        let seq = ["x", PAD, PAD];
        assert_eq!(build_vocab([&seq[..]]).len(), 3);
    }

    #[test]
    fn serde_round_trip() {
        let seq = ["q", "r"];
        let v = build_vocab([&seq[..]]);
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
