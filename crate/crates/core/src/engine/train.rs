//! Full-batch training on a labeled sample set, loss evaluation and metrics.

use serde::{Deserialize, Serialize};

use super::data::{EvalSet, SampleTable, TaskData};
use crate::error::{Error, Result};
use crate::eval::metrics::{accuracy_and_error, auc, average_precision};
use crate::graph::{normalize_adjacency, sample_non_edges, Edge, SparseGraph, WeightedGraph};
use crate::seed;
use crate::tensor::{
    adam_step, binary_cross_entropy, class_cross_entropy, classify, decode_links, link_logits_backward,
    sample_cross_entropy, AdamConfig, AdamState, Confidence, GcnModel, Gradients, Matrix,
};

/// Loss targets resolved to concrete nodes or pairs.
enum Targets {
    Nodes(Vec<(usize, usize)>),
    Pairs(Vec<Edge>, Vec<f64>),
}

fn targets(data: &TaskData, labeled: &[(usize, usize)], negatives: &[Edge]) -> Targets {
    match &data.samples {
        SampleTable::Nodes => Targets::Nodes(labeled.to_vec()),
        SampleTable::Pairs(table) => {
            let mut pairs: Vec<Edge> = labeled.iter().map(|&(i, _)| table[i]).collect();
            let mut ys: Vec<f64> = labeled.iter().map(|&(_, y)| y as f64).collect();
            pairs.extend_from_slice(negatives);
            ys.resize(pairs.len(), 0.0);
            Targets::Pairs(pairs, ys)
        }
    }
}

/// Mean cross-entropy over `labeled` (plus sampled link negatives) and,
/// when asked, its parameter gradients.
fn loss_and_grad(
    model: &GcnModel,
    adj: &WeightedGraph,
    x: &Matrix,
    targets: &Targets,
    want_grad: bool,
) -> Result<(f64, Option<Gradients>)> {
    let cache = model.forward(adj, x)?;
    let (loss, grad_out) = match targets {
        Targets::Nodes(t) => {
            let (loss, g) = class_cross_entropy(&classify(&cache.out), t)?;
            (loss, g)
        }
        Targets::Pairs(pairs, ys) => {
            let conf = decode_links(&cache.out, pairs)?;
            let (loss, g) = binary_cross_entropy(&conf, ys)?;
            let grad = if want_grad {
                link_logits_backward(&cache.out, pairs, &g)?
            } else {
                Matrix::zeros(0, 0)
            };
            (loss, grad)
        }
    };
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss".into()));
    }
    let grads = if want_grad {
        Some(model.backward(adj, x, &cache, &grad_out)?)
    } else {
        None
    };
    Ok((loss, grads))
}

/// `𝓛 = CE(g, labeled) / |labeled|` on the given message graph, without
/// sampled negatives.
pub fn labeled_loss(model: &GcnModel, adj: &WeightedGraph, data: &TaskData, labeled: &[(usize, usize)]) -> Result<f64> {
    let t = targets(data, labeled, &[]);
    Ok(loss_and_grad(model, adj, &data.features, &t, false)?.0)
}

/// Fresh Adam state for `model` at learning rate `lr`.
pub fn optimizer(model: &GcnModel, lr: f64) -> AdamState {
    AdamState::new(
        &model.params,
        AdamConfig {
            lr,
            ..AdamConfig::default()
        },
    )
}

/// Runs `epochs` Adam steps and returns the loss before each step. Link
/// training adds, per epoch, as many uniformly drawn non-edges of the
/// message graph as there are observed positives.
pub fn train_epochs(
    model: &mut GcnModel,
    data: &TaskData,
    message: &SparseGraph,
    labeled: &[(usize, usize)],
    epochs: usize,
    state: &mut AdamState,
    rng: &mut seed::Rng,
) -> Result<Vec<f64>> {
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("training on an empty observed set".into()));
    }
    let adj = normalize_adjacency(message);
    let positives = labeled.iter().filter(|&&(_, y)| y == 1).count();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let negatives = match data.samples {
            SampleTable::Pairs(_) => sample_non_edges(message, positives, rng)?,
            SampleTable::Nodes => Vec::new(),
        };
        let t = targets(data, labeled, &negatives);
        let (loss, grads) = loss_and_grad(model, &adj, &data.features, &t, true)
            .map_err(|e| annotate(e, epoch))?;
        adam_step(&mut model.params, &grads.expect("gradients requested"), state)
            .map_err(|e| annotate(e, epoch))?;
        history.push(loss);
    }
    Ok(history)
}

fn annotate(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::NonFinite(format!("{what} at epoch {epoch}")),
        other => other,
    }
}

/// Per-sample cross-entropy of `conf` against `labels`.
pub fn per_sample_ce(conf: &Confidence, labels: &[usize]) -> Vec<f64> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| sample_cross_entropy(conf, i, y))
        .collect()
}

/// Held-out metrics. Fractions, never percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<f64>,
    /// 0-1 error of the hard decision.
    pub error: f64,
}

impl Metrics {
    /// Accuracy for node tasks, AUC for link tasks.
    pub fn primary(&self) -> f64 {
        self.accuracy.or(self.auc).unwrap_or(1.0 - self.error)
    }
}

pub fn evaluate(model: &GcnModel, adj: &WeightedGraph, data: &TaskData, set: &EvalSet) -> Result<Metrics> {
    if set.is_empty() {
        return Err(Error::Data("empty evaluation set".into()));
    }
    let conf = model.confidence(adj, &data.features, set.query())?;
    let pred: Vec<usize> = (0..conf.len()).map(|i| conf.decision(i)).collect();
    let idx: Vec<usize> = (0..set.len()).collect();
    let (acc, error) = accuracy_and_error(&pred, &set.labels, &idx)?;
    match data.samples {
        SampleTable::Nodes => Ok(Metrics {
            accuracy: Some(acc),
            auc: None,
            ap: None,
            error,
        }),
        SampleTable::Pairs(_) => {
            let labels: Vec<bool> = set.labels.iter().map(|&y| y == 1).collect();
            Ok(Metrics {
                accuracy: None,
                auc: Some(auc(conf.values(), &labels)?),
                ap: Some(average_precision(conf.values(), &labels)?),
                error,
            })
        }
    }
}

