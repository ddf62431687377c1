use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reported statement has {needed} tokens but capacity is {capacity}")]
pub struct CapacityError {
    pub needed: usize,
    pub capacity: usize,
}

/// Fixed-capacity token window. `stmt_spans` are the kept statements'
/// positions in `tokens`; `kept` their indices in the original statement list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub mask: Vec<bool>,
    pub stmt_spans: Vec<(usize, usize)>,
    pub kept: Vec<usize>,
    /// Index into `stmt_spans` of the reported statement.
    pub reported: usize,
}

impl TokenSequence {
    pub fn capacity(&self) -> usize {
        self.tokens.len()
    }

    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Fits whole statements into `capacity` tokens around the reported one.
///
/// Everything is kept when it fits. Otherwise the reported statement is taken
/// first and neighbours are added alternately, left then right; a side stops
/// at its first statement that would overflow, so the kept statements are
/// contiguous. The tail is padded with `<pad>`.
pub fn fit_length(
    tokens: &[String],
    spans: &[(usize, usize)],
    reported: usize,
    capacity: usize,
) -> Result<TokenSequence, CapacityError> {
    assert!(reported < spans.len(), "reported span index out of range");
    let size = |i: usize| spans[i].1 - spans[i].0;
    if size(reported) > capacity {
        return Err(CapacityError { needed: size(reported), capacity });
    }

    let (lo, hi) = if tokens.len() <= capacity {
        (0, spans.len())
    } else {
        let (mut lo, mut hi) = (reported, reported + 1);
        let mut used = size(reported);
        let (mut left_open, mut right_open) = (true, true);
        while left_open || right_open {
            if left_open {
                if lo > 0 && used + size(lo - 1) <= capacity {
                    lo -= 1;
                    used += size(lo);
                } else {
                    left_open = false;
                }
            }
            if right_open {
                if hi < spans.len() && used + size(hi) <= capacity {
                    used += size(hi);
                    hi += 1;
                } else {
                    right_open = false;
                }
            }
        }
        (lo, hi)
    };

    let mut out = Vec::with_capacity(capacity);
    let mut stmt_spans = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let start = out.len();
        out.extend_from_slice(&tokens[spans[i].0..spans[i].1]);
        stmt_spans.push((start, out.len()));
    }
    let real = out.len();
    out.resize(capacity, PAD.to_string());
    let mut mask = vec![true; real];
    mask.resize(capacity, false);
    Ok(TokenSequence { tokens: out, mask, stmt_spans, kept: (lo..hi).collect(), reported: reported - lo })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(sizes: &[usize]) -> (Vec<String>, Vec<(usize, usize)>) {
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        for (s, &n) in sizes.iter().enumerate() {
            let start = tokens.len();
            tokens.extend((0..n).map(|t| format!("s{s}t{t}")));
            spans.push((start, tokens.len()));
        }
        (tokens, spans)
    }

    #[test]
    fn short_input_is_padded() {
        let (t, s) = layout(&[5]);
        let seq = fit_length(&t, &s, 0, 8).unwrap();
        assert_eq!(seq.mask, [true, true, true, true, true, false, false, false]);
        assert_eq!(&seq.tokens[5..], [PAD, PAD, PAD]);
    }

    #[test]
    fn left_before_right_and_whole_statements_only() {
        // sizes [4,3,4], reported middle, capacity 8: middle + left = 7, right would make 11
        let (t, s) = layout(&[4, 3, 4]);
        let seq = fit_length(&t, &s, 1, 8).unwrap();
        assert_eq!(seq.kept, vec![0, 1]);
        assert_eq!(seq.stmt_spans, vec![(0, 4), (4, 7)]);
        assert_eq!(seq.reported, 1);
        assert_eq!(seq.tokens[..7], t[..7]);
        assert_eq!(seq.tokens[7], PAD);
    }

    #[test]
    fn oversized_reported_statement() {
        let (t, s) = layout(&[41]);
        assert_eq!(fit_length(&t, &s, 0, 40), Err(CapacityError { needed: 41, capacity: 40 }));
    }

    #[test]
    fn blocked_side_stays_blocked() {
        // left neighbour too big; the small statement beyond it is not taken
        let (t, s) = layout(&[1, 6, 2, 2]);
        let seq = fit_length(&t, &s, 2, 5).unwrap();
        assert_eq!(seq.kept, vec![2, 3]);
    }
}
