//! Small numeric utilities shared by the estimators.

use std::cmp::Ordering;

/// `ln Σ exp(v_i)` accumulated in the given order. Empty input gives `-∞`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s = v.iter().fold(0.0, |acc, &x| acc + (x - m).exp());
    m + s.ln()
}

/// Indices of the tail of a schedule: its last `⌈len/2⌉` entries.
pub fn tail_range(len: usize) -> std::ops::Range<usize> {
    let keep = len.div_ceil(2);
    len - keep..len
}

/// Total-order wrapper for `f64` keys (NaN never appears in our keys).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key(pub f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
