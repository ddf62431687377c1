//! Top-k% precision and recall.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::rank::RankedList;
use super::EvalError;
use crate::warnings::Label;

pub const K_GRID: [u32; 8] = [1, 5, 10, 20, 30, 40, 50, 60];

/// An unreduced ratio; equality compares values, not representations.
#[derive(Debug, Clone, Copy, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Fraction { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Fraction {
    fn eq(&self, o: &Self) -> bool {
        self.num as u128 * o.den as u128 == o.num as u128 * self.den as u128
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `ceil(k·n/100)`, computed in integers.
pub fn head_size(n: usize, k_percent: u32) -> usize {
    (n * k_percent as usize).div_ceil(100)
}

fn check_k(k: u32) -> Result<(), EvalError> {
    if k == 0 || k > 100 {
        return Err(EvalError::InvalidK(k));
    }
    Ok(())
}

fn is_tp(labels: &BTreeMap<String, Label>, id: &str) -> Result<bool, EvalError> {
    labels.get(id).map(|l| l.is_tp()).ok_or_else(|| EvalError::MissingLabel(id.to_string()))
}

fn tps_in_head(ranked: &RankedList, labels: &BTreeMap<String, Label>, k: u32) -> Result<(u64, usize), EvalError> {
    check_k(k)?;
    if ranked.is_empty() {
        return Err(EvalError::EmptyList);
    }
    let head = head_size(ranked.len(), k);
    let mut hits = 0;
    for id in ranked.ids().take(head) {
        hits += is_tp(labels, id)? as u64;
    }
    Ok((hits, head))
}

pub fn precision_at_k(ranked: &RankedList, labels: &BTreeMap<String, Label>, k: u32) -> Result<Fraction, EvalError> {
    let (hits, head) = tps_in_head(ranked, labels, k)?;
    Ok(Fraction::new(hits, head as u64))
}

/// Denominator is the number of true positives in the ranked list.
pub fn recall_at_k(ranked: &RankedList, labels: &BTreeMap<String, Label>, k: u32) -> Result<Fraction, EvalError> {
    let (hits, _) = tps_in_head(ranked, labels, k)?;
    let mut total = 0;
    for id in ranked.ids() {
        total += is_tp(labels, id)? as u64;
    }
    if total == 0 {
        return Err(EvalError::NoActualTPs);
    }
    Ok(Fraction::new(hits, total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// keyed by k percent
    pub per_k: BTreeMap<u32, PrecisionRecall>,
    pub actual_tps: usize,
    pub total_warnings: usize,
}

impl MetricReport {
    pub fn evaluate(ranked: &RankedList, labels: &BTreeMap<String, Label>, grid: &[u32]) -> Result<Self, EvalError> {
        let mut per_k = BTreeMap::new();
        for &k in grid {
            let precision = precision_at_k(ranked, labels, k)?.value();
            let recall = recall_at_k(ranked, labels, k)?.value();
            per_k.insert(k, PrecisionRecall { precision, recall });
        }
        let mut actual_tps = 0;
        for id in ranked.ids() {
            actual_tps += is_tp(labels, id)? as usize;
        }
        Ok(MetricReport { per_k, actual_tps, total_warnings: ranked.len() })
    }

    /// Unweighted mean of the per-k values; totals are summed.
    pub fn average(reports: &[MetricReport]) -> Option<Self> {
        let first = reports.first()?;
        let n = reports.len() as f64;
        let per_k = first
            .per_k
            .keys()
            .map(|&k| {
                let (p, r) = reports.iter().fold((0.0, 0.0), |(p, r), m| (p + m.per_k[&k].precision, r + m.per_k[&k].recall));
                (k, PrecisionRecall { precision: p / n, recall: r / n })
            })
            .collect();
        Some(MetricReport {
            per_k,
            actual_tps: reports.iter().map(|m| m.actual_tps).sum(),
            total_warnings: reports.iter().map(|m| m.total_warnings).sum(),
        })
    }

    pub fn recall(&self, k: u32) -> Option<f64> {
        self.per_k.get(&k).map(|m| m.recall)
    }

    pub fn precision(&self, k: u32) -> Option<f64> {
        self.per_k.get(&k).map(|m| m.precision)
    }

    /// Aligned text table, one row per k.
    pub fn table(&self) -> String {
        let mut s = format!("{:>6}  {:>9}  {:>9}\n", "top-k%", "precision", "recall");
        for (k, m) in &self.per_k {
            s += &format!("{:>6}  {:>9.4}  {:>9.4}\n", k, m.precision, m.recall);
        }
        s += &format!("actual TPs {} of {} warnings\n", self.actual_tps, self.total_warnings);
        s
    }
}
