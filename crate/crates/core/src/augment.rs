//! Multi-view graph perturbation `Ĝ = G(X⊙M_x, A⊙M_a)`.
//!
//! The adjacency mask is realized as symmetric edge dropping over stored
//! edges, so `A⊙M_a` never needs an `N×N` buffer. Mask entries over
//! non-edges are 1 and contribute nothing to the perturbation magnitude.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, SparseGraph};
use crate::seed;
use crate::tensor::{Confidence, GcnModel, Matrix, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    /// Independent feature-entry and edge dropping.
    #[default]
    Standard,
    /// Drops whole nodes (feature row plus incident edges) at `feature_drop_rate`.
    NodeDrop,
    /// Feature masking only.
    FeatureOnly,
    /// Edge dropping only.
    StructureOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPlan {
    pub view_count: usize,
    pub feature_drop_rate: f64,
    pub edge_drop_rate: f64,
    pub base_seed: u64,
    #[serde(default)]
    pub mode: AugmentMode,
}

impl Default for AugmentationPlan {
    fn default() -> Self {
        Self {
            view_count: 5,
            feature_drop_rate: 0.05,
            edge_drop_rate: 0.05,
            base_seed: 0,
            mode: AugmentMode::Standard,
        }
    }
}

impl AugmentationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.view_count == 0 {
            return Err(Error::InvalidArgument("augmentation needs at least one view".into()));
        }
        for (name, r) in [("feature_drop_rate", self.feature_drop_rate), ("edge_drop_rate", self.edge_drop_rate)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name}={r} must lie in [0, 1)")));
            }
        }
        Ok(())
    }

    /// Same plan with a different base seed.
    pub fn reseeded(&self, base_seed: u64) -> Self {
        Self { base_seed, ..*self }
    }

    pub fn is_identity(&self) -> bool {
        match self.mode {
            AugmentMode::Standard => self.feature_drop_rate == 0.0 && self.edge_drop_rate == 0.0,
            AugmentMode::NodeDrop | AugmentMode::FeatureOnly => self.feature_drop_rate == 0.0,
            AugmentMode::StructureOnly => self.edge_drop_rate == 0.0,
        }
    }
}

/// Realized masks for one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPair {
    /// Sorted dropped feature columns, per node.
    pub dropped_features: Vec<Vec<usize>>,
    /// Keep flag per undirected edge, in [`SparseGraph::edges`] order.
    pub edge_keep: Vec<bool>,
    pub seed: u64,
}

impl MaskPair {
    pub fn all_ones(g: &SparseGraph) -> Self {
        Self {
            dropped_features: vec![Vec::new(); g.node_count()],
            edge_keep: vec![true; g.edge_count()],
            seed: 0,
        }
    }

    pub fn dropped_feature_count(&self) -> usize {
        self.dropped_features.iter().map(Vec::len).sum()
    }

    pub fn dropped_edge_count(&self) -> usize {
        self.edge_keep.iter().filter(|k| !**k).count()
    }
}

/// Draws the masks of view `view` with seed `derive(base_seed, view)`.
/// Each entry is kept with probability `1 - rate`.
pub fn sample_masks(plan: &AugmentationPlan, view: usize, g: &SparseGraph, feature_dim: usize) -> Result<MaskPair> {
    plan.validate()?;
    if view >= plan.view_count {
        return Err(Error::OutOfRange {
            what: "views",
            index: view,
            len: plan.view_count,
        });
    }
    Ok(draw_masks(plan, view as u64, g, feature_dim))
}

fn draw_masks(plan: &AugmentationPlan, stream: u64, g: &SparseGraph, feature_dim: usize) -> MaskPair {
    let seed = seed::derive(plan.base_seed, stream);
    let mut rng = seed::rng(seed);
    let n = g.node_count();
    let (feature_rate, edge_rate) = match plan.mode {
        AugmentMode::Standard => (plan.feature_drop_rate, plan.edge_drop_rate),
        AugmentMode::FeatureOnly => (plan.feature_drop_rate, 0.0),
        AugmentMode::StructureOnly => (0.0, plan.edge_drop_rate),
        AugmentMode::NodeDrop => (0.0, 0.0),
    };
    let mut dropped_features = vec![Vec::new(); n];
    let mut edge_keep = vec![true; g.edge_count()];

    if plan.mode == AugmentMode::NodeDrop {
        if plan.feature_drop_rate > 0.0 {
            let dropped: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < plan.feature_drop_rate).collect();
            for (v, row) in dropped_features.iter_mut().enumerate() {
                if dropped[v] {
                    *row = (0..feature_dim).collect();
                }
            }
            for (keep, (i, j)) in edge_keep.iter_mut().zip(g.edges()) {
                *keep = !(dropped[i] || dropped[j]);
            }
        }
    } else {
        if feature_rate > 0.0 {
            for row in dropped_features.iter_mut() {
                for c in 0..feature_dim {
                    if rng.random::<f64>() < feature_rate {
                        row.push(c);
                    }
                }
            }
        }
        if edge_rate > 0.0 {
            for keep in edge_keep.iter_mut() {
                *keep = rng.random::<f64>() >= edge_rate;
            }
        }
    }
    MaskPair {
        dropped_features,
        edge_keep,
        seed,
    }
}

/// `‖1−M_x‖²/(N·F) + ‖1−M_a‖²/N²`; each dropped undirected edge clears two
/// adjacency entries.
pub fn perturbation_magnitude(m: &MaskPair, n: usize, f: usize) -> Result<f64> {
    if m.dropped_features.len() != n || m.dropped_features.iter().flatten().any(|&c| c >= f) {
        return Err(Error::Shape(format!("feature mask does not fit {n}x{f}")));
    }
    if n == 0 || f == 0 {
        return Ok(0.0);
    }
    let features = m.dropped_feature_count() as f64 / (n as f64 * f as f64);
    let adjacency = (2 * m.dropped_edge_count()) as f64 / (n as f64 * n as f64);
    Ok(features + adjacency)
}

/// Applies the masks; inputs are left untouched.
pub fn apply_augmentation(g: &SparseGraph, x: &Matrix, m: &MaskPair) -> Result<(SparseGraph, Matrix)> {
    if m.edge_keep.len() != g.edge_count() || m.dropped_features.len() != x.rows() || x.rows() != g.node_count() {
        return Err(Error::Shape("masks do not match graph/features".into()));
    }
    let kept = g
        .edges()
        .into_iter()
        .zip(&m.edge_keep)
        .filter_map(|(e, &k)| k.then_some(e));
    let graph = SparseGraph::from_edges(g.node_count(), kept)?;
    let mut features = x.clone();
    for (v, cols) in m.dropped_features.iter().enumerate() {
        let row = features.row_mut(v);
        for &c in cols {
            *row.get_mut(c).ok_or_else(|| Error::Shape(format!("feature column {c} out of range")))? = 0.0;
        }
    }
    Ok((graph, features))
}

/// Per-view confidences on a query set, their mean, and each view's `ε`.
#[derive(Debug, Clone)]
pub struct MultiViewConfidence {
    pub mean: Confidence,
    pub views: Vec<Confidence>,
    pub epsilons: Vec<f64>,
}

pub fn multi_view_confidence(
    model: &GcnModel,
    g: &SparseGraph,
    x: &Matrix,
    plan: &AugmentationPlan,
    query: Query<'_>,
) -> Result<MultiViewConfidence> {
    plan.validate()?;
    let mut views = Vec::with_capacity(plan.view_count);
    let mut epsilons = Vec::with_capacity(plan.view_count);
    for v in 0..plan.view_count {
        let masks = sample_masks(plan, v, g, x.cols())?;
        epsilons.push(perturbation_magnitude(&masks, g.node_count(), x.cols())?);
        let (pg, px) = apply_augmentation(g, x, &masks)?;
        views.push(model.confidence(&normalize_adjacency(&pg), &px, query)?);
    }
    Ok(MultiViewConfidence {
        mean: Confidence::mean(&views)?,
        views,
        epsilons,
    })
}

/// Fraction of samples whose hard decision under any view differs from
/// the unperturbed decision.
pub fn inconsistency_from(base: &Confidence, views: &[Confidence]) -> Result<f64> {
    if base.is_empty() {
        return Err(Error::InvalidArgument("inconsistency over an empty test set".into()));
    }
    if views.iter().any(|v| v.len() != base.len()) {
        return Err(Error::Shape("view and base confidences differ in length".into()));
    }
    let flipped = (0..base.len())
        .filter(|&i| {
            let d = base.decision(i);
            views.iter().any(|v| v.decision(i) != d)
        })
        .count();
    Ok(flipped as f64 / base.len() as f64)
}

pub fn estimate_inconsistency(
    model: &GcnModel,
    g: &SparseGraph,
    x: &Matrix,
    plan: &AugmentationPlan,
    test_set: Query<'_>,
) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::InvalidArgument("inconsistency over an empty test set".into()));
    }
    let base = model.confidence(&normalize_adjacency(g), x, test_set)?;
    let mv = multi_view_confidence(model, g, x, plan, test_set)?;
    inconsistency_from(&base, &mv.views)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpiEstimate {
    /// `max ‖g(Ĝ)−g(G)‖²/ε` over trials with `ε > 0`.
    pub estimate: f64,
    /// Running maximum after each trial.
    pub running: Vec<f64>,
    pub trials_used: usize,
}

/// Empirical lower bound on the perturbation-invariance constant `C`.
/// Trial `t` uses the mask stream `derive(base_seed, t)`, so a longer run
/// extends a shorter one.
pub fn estimate_gpi_constant(
    model: &GcnModel,
    g: &SparseGraph,
    x: &Matrix,
    plan: &AugmentationPlan,
    trials: usize,
    probe: Query<'_>,
) -> Result<GpiEstimate> {
    plan.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("GPI estimate needs at least one trial".into()));
    }
    let base = model.confidence(&normalize_adjacency(g), x, probe)?;
    let mut best = 0.0f64;
    let mut running = Vec::with_capacity(trials);
    let mut used = 0;
    for t in 0..trials {
        let masks = draw_masks(plan, t as u64, g, x.cols());
        let eps = perturbation_magnitude(&masks, g.node_count(), x.cols())?;
        if eps > 0.0 {
            let (pg, px) = apply_augmentation(g, x, &masks)?;
            let pert = model.confidence(&normalize_adjacency(&pg), &px, probe)?;
            let dist: f64 = pert
                .values()
                .iter()
                .zip(base.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.max(dist / eps);
            used += 1;
        }
        running.push(best);
    }
    Ok(GpiEstimate {
        estimate: best,
        running,
        trials_used: used,
    })
}
