use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A committed pseudo label and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub sample: usize,
    pub label: usize,
    pub iteration: usize,
    pub confidence: f64,
}

/// Algorithm state between iterations. Samples are ids in the task's sample
/// table; `observed` carries labels, `unobserved` is the candidate pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlState {
    pub observed: Vec<(usize, usize)>,
    pub unobserved: Vec<usize>,
    pub pseudo: Vec<PseudoLabel>,
    /// Running minimum of `c_min` over iterations; `None` before any PL.
    pub threshold_confidence: Option<f64>,
    pub t: usize,
    pub k: usize,
    pub cap: usize,
}

impl PlState {
    pub fn new(observed: Vec<(usize, usize)>, unobserved: Vec<usize>, k: usize, cap: usize) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::Data("the observed set is empty".into()));
        }
        Ok(Self {
            observed,
            unobserved,
            pseudo: Vec::new(),
            threshold_confidence: None,
            t: 0,
            k,
            cap,
        })
    }

    /// `q = 1 − threshold_confidence`; undefined before the first selection.
    pub fn q(&self) -> Option<f64> {
        self.threshold_confidence.map(|c| 1.0 - c)
    }

    /// Folds one iteration's `c_min` into the running minimum.
    pub fn record_confidence(&mut self, c_min: Option<f64>) {
        if let Some(c) = c_min {
            self.threshold_confidence = Some(match self.threshold_confidence {
                Some(prev) => prev.min(c),
                None => c,
            });
        }
    }

    /// Moves the selected pool positions into the observed set with their
    /// labels and confidences, keeping the remaining pool order.
    pub fn commit(&mut self, positions: &[usize], labels: &[usize], confidences: &[f64]) {
        let mut taken = vec![false; self.unobserved.len()];
        for (&p, &label) in positions.iter().zip(labels) {
            taken[p] = true;
            let sample = self.unobserved[p];
            self.observed.push((sample, label));
            self.pseudo.push(PseudoLabel {
                sample,
                label,
                iteration: self.t,
                confidence: confidences[p],
            });
        }
        let mut i = 0;
        self.unobserved.retain(|_| {
            let keep = !taken[i];
            i += 1;
            keep
        });
        self.t += 1;
    }

    /// The loop continues while the observed set is under the cap and
    /// candidates remain.
    pub fn should_continue(&self) -> bool {
        self.observed.len() < self.cap && !self.unobserved.is_empty()
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    /// `|Ŷ_o|` before the update.
    pub observed: usize,
    /// `|Ŷ_u|` before the update.
    pub unobserved: usize,
    pub selected: usize,
    pub exhausted: bool,
    pub c_min: Option<f64>,
    pub threshold_confidence: Option<f64>,
    pub q: Option<f64>,
    /// `𝓛^{(t)}`: current model on the current observed set.
    pub loss_prev: f64,
    /// `𝓛^{(t+1)}`: current model on the enlarged set, before fine-tuning.
    pub loss_before: f64,
    /// Fine-tuned student on the enlarged set.
    pub loss_after: f64,
    pub beta: f64,
    /// `Cov[ce(g_ψ, Y), 𝒯]` against ground truth; absent without it.
    pub covariance: Option<f64>,
    pub bound_rhs: Option<f64>,
    /// Mean ground-truth cross-entropy over the pool, `E[ce]`.
    pub pool_mean_ce: Option<f64>,
    pub indicator_mean: f64,
    pub indicator_mean_exact: bool,
    pub pl_error_rate: Option<f64>,
    pub val_metric: f64,
    pub test_metric: f64,
    pub test_error: f64,
    /// `𝒜` of the fine-tuned student on the test set.
    pub inconsistency: f64,
    pub view_epsilons: Vec<f64>,
}
