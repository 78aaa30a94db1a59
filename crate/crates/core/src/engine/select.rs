//! Pseudo-label selection strategies over the unobserved pool.

use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Outcome of one selection round over the current pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySelection {
    /// `𝒯` over pool positions.
    pub indicator: Vec<bool>,
    /// Selected pool positions, highest confidence first for cautious selection.
    pub selected: Vec<usize>,
    /// Lowest confidence among the selected samples.
    pub c_min: Option<f64>,
    /// The budget exceeded the pool and everything remaining was taken.
    pub exhausted: bool,
}

impl StrategySelection {
    fn from_positions(n: usize, selected: Vec<usize>, confidences: &[f64], exhausted: bool) -> Self {
        let mut indicator = vec![false; n];
        for &i in &selected {
            indicator[i] = true;
        }
        let c_min = selected
            .iter()
            .map(|&i| confidences[i])
            .min_by(f64::total_cmp);
        Self {
            indicator,
            selected,
            c_min,
            exhausted,
        }
    }
}

fn check(confidences: &[f64]) -> Result<()> {
    if confidences.iter().any(|c| c.is_nan()) {
        return Err(Error::NonFinite("candidate confidences".into()));
    }
    Ok(())
}

/// Descending confidence, ascending position on ties.
fn rank(confidences: &[f64], a: usize, b: usize) -> Ordering {
    confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b))
}

/// The `k` most confident positions. A budget larger than the pool selects
/// everything and sets `exhausted`.
pub fn select_top_k(confidences: &[f64], k: usize) -> Result<StrategySelection> {
    check(confidences)?;
    let n = confidences.len();
    let exhausted = k > n;
    let k = k.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    if k > 0 && k < n {
        order.select_nth_unstable_by(k - 1, |&a, &b| rank(confidences, a, b));
    }
    order.truncate(k);
    order.sort_by(|&a, &b| rank(confidences, a, b));
    Ok(StrategySelection::from_positions(n, order, confidences, exhausted))
}

/// `k` positions drawn uniformly without replacement, reported in ascending
/// position order. `confidences` only feed `c_min`.
pub fn select_random(confidences: &[f64], k: usize, rng: &mut seed::Rng) -> Result<StrategySelection> {
    check(confidences)?;
    let n = confidences.len();
    let exhausted = k > n;
    let k = k.min(n);
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(StrategySelection::from_positions(n, picked, confidences, exhausted))
}
