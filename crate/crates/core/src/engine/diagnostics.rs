//! Error bound, covariance diagnostic and the loss-recursion check.

use serde::{Deserialize, Serialize};

use super::IterationRecord;
use crate::error::{Error, Result};

/// Absolute slack allowed in the loss-recursion inequality.
pub const LOSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    /// `2(q + 𝒜)`, unclamped.
    pub value: f64,
    /// The bound exceeds 1 and says nothing about a 0-1 error.
    pub vacuous: bool,
}

/// `Err(g) ≤ 2(q + 𝒜)`.
pub fn error_bound(q: f64, inconsistency: f64) -> Result<ErrorBound> {
    for (name, v) in [("q", q), ("inconsistency", inconsistency)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name}={v} must lie in [0, 1]")));
        }
    }
    let value = 2.0 * (q + inconsistency);
    Ok(ErrorBound {
        value,
        vacuous: value > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDiagnostic {
    /// Population covariance `Cov[ce, 𝒯]` over the pool.
    pub covariance: f64,
    /// `|Ŷ_u| / (|Ŷ_o| + k)`.
    pub beta: f64,
    /// `β·Cov + 𝓛^{(t)}`.
    pub bound_rhs: f64,
    /// `Σ𝒯 / |Ŷ_u|`.
    pub indicator_mean: f64,
    /// `Σ𝒯` equals `k` exactly, so `E[𝒯] = k/|Ŷ_u|`.
    pub indicator_mean_exact: bool,
}

/// Covariance between per-sample cross-entropy `ce` and the selection
/// indicator over the unobserved pool, plus the loss-recursion factor `β`.
/// `observed` is `|Ŷ_o|` before the update and `loss_prev` is `𝓛^{(t)}`.
pub fn covariance_diagnostic(
    ce: &[f64],
    indicator: &[bool],
    observed: usize,
    k: usize,
    loss_prev: f64,
) -> Result<CovarianceDiagnostic> {
    let n = ce.len();
    if n == 0 || indicator.len() != n {
        return Err(Error::Shape(format!(
            "{} losses and {} indicator entries over the pool",
            n,
            indicator.len()
        )));
    }
    if observed + k == 0 {
        return Err(Error::InvalidArgument("β undefined with empty observed set and k = 0".into()));
    }
    let selected = indicator.iter().filter(|&&b| b).count();
    let nf = n as f64;
    let ce_mean = ce.iter().sum::<f64>() / nf;
    let t_mean = selected as f64 / nf;
    let covariance = ce
        .iter()
        .zip(indicator)
        .map(|(&c, &t)| (c - ce_mean) * (f64::from(u8::from(t)) - t_mean))
        .sum::<f64>()
        / nf;
    let beta = nf / (observed + k) as f64;
    Ok(CovarianceDiagnostic {
        covariance,
        beta,
        bound_rhs: beta * covariance + loss_prev,
        indicator_mean: t_mean,
        indicator_mean_exact: selected == k && t_mean == k as f64 / nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCheckStep {
    pub t: usize,
    /// `𝓛^{(t+1)}`: current student on the enlarged set, before fine-tuning.
    pub loss_next: f64,
    /// `β·Cov + 𝓛^{(t)}`.
    pub bound_rhs: f64,
    /// `bound_rhs − loss_next`.
    pub slack: f64,
    pub holds: bool,
    /// Fine-tuning did not reduce the loss on the enlarged set.
    pub assumption_violated: bool,
    /// `k·(E[ce] − 𝓛^{(t)}) / (|Ŷ_o| + k)`: what the recursion loses when
    /// the pool's ground-truth loss exceeds the observed-set loss.
    pub gap_term: Option<f64>,
    /// `Σ_sel (ce_truth − ce_pseudo) / (|Ŷ_o| + k)`: pseudo labels that
    /// disagree with ground truth make the enlarged loss smaller.
    pub label_term: Option<f64>,
    /// `slack − (label_term − gap_term)`; zero up to rounding.
    pub identity_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCheckReport {
    pub steps: Vec<LossCheckStep>,
    pub violations: usize,
    pub assumption_violations: usize,
    /// Iterations without a covariance (no ground truth).
    pub skipped: usize,
}

impl LossCheckReport {
    pub fn all_hold(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `𝓛^{(t+1)} ≤ β·Cov + 𝓛^{(t)} + tol` per iteration and counts
/// iterations where fine-tuning failed to lower the loss, separately.
///
/// Exactly, `slack = label_term − gap_term`: the inequality holds when the
/// pool's mean loss does not exceed the observed-set loss by more than the
/// pseudo-label disagreement makes up for. Each step reports both terms.
pub fn loss_trajectory_check(records: &[IterationRecord]) -> LossCheckReport {
    let mut report = LossCheckReport {
        steps: Vec::with_capacity(records.len()),
        violations: 0,
        assumption_violations: 0,
        skipped: 0,
    };
    for r in records {
        let assumption_violated = r.loss_after > r.loss_before;
        if assumption_violated {
            report.assumption_violations += 1;
        }
        let Some(cov) = r.covariance else {
            report.skipped += 1;
            continue;
        };
        let bound_rhs = r.beta * cov + r.loss_prev;
        let slack = bound_rhs - r.loss_before;
        let holds = slack >= -LOSS_CHECK_TOL;
        if !holds {
            report.violations += 1;
        }
        let denom = (r.observed + r.selected) as f64;
        let k = r.selected as f64;
        let (gap_term, label_term, identity_residual) = match r.pool_mean_ce {
            Some(mean_ce) => {
                let ce_pseudo_sel = r.loss_before * denom - r.observed as f64 * r.loss_prev;
                let ce_truth_sel = r.unobserved as f64 * cov + k * mean_ce;
                let gap = k * (mean_ce - r.loss_prev) / denom;
                let label = (ce_truth_sel - ce_pseudo_sel) / denom;
                (Some(gap), Some(label), Some(slack - (label - gap)))
            }
            None => (None, None, None),
        };
        report.steps.push(LossCheckStep {
            t: r.t,
            loss_next: r.loss_before,
            bound_rhs,
            slack,
            holds,
            assumption_violated,
            gap_term,
            label_term,
            identity_residual,
        });
    }
    report
}
