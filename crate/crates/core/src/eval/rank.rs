use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: String,
    pub score: f64,
}

/// Highest score first; equal scores in ascending id order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }
}

pub fn rank<I, S>(scores: I) -> Result<RankedList, EvalError>
where
    I: IntoIterator<Item = (S, f64)>,
    S: Into<String>,
{
    let mut entries = Vec::new();
    for (id, score) in scores {
        let id = id.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(EvalError::InvalidScore { id, score });
        }
        entries.push(RankedEntry { id, score });
    }
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    Ok(RankedList { entries })
}
