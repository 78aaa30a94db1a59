//! Datasets and their task views: labeled samples, candidate pools and
//! evaluation sets for node classification and link prediction.

use crate::config::{DatasetSpec, ExperimentConfig, PoolConfig, TaskKind};
use crate::error::{Error, Result};
use crate::graph::{
    self, generate_sbm, load_edge_list, load_features, load_labels, sbm_features,
    split_edges, split_nodes, Edge, EdgeSplit, NodeLabels, SparseGraph,
};
use crate::seed::{self, stream};
use crate::tensor::{Head, Matrix, Query};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseGraph,
    pub features: Matrix,
    pub labels: Option<NodeLabels>,
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    match spec {
        DatasetSpec::Sbm {
            block_sizes,
            p_in,
            p_out,
            feature_dim,
            feature_signal,
            seed,
        } => {
            let (graph, labels) = generate_sbm(block_sizes, *p_in, *p_out, *seed)
                .map_err(|e| Error::Config(format!("sbm: {e}")))?;
            let features = sbm_features(&labels, *feature_dim, *feature_signal, seed::derive(*seed, 1))
                .map_err(|e| Error::Config(format!("sbm: {e}")))?;
            Ok(Dataset {
                graph,
                features,
                labels: Some(labels),
            })
        }
        DatasetSpec::Files { edges, features, labels } => {
            let parsed = load_edge_list(edges)?;
            if parsed.self_loops_dropped > 0 {
                log::warn!("dropped {} self-loops from {}", parsed.self_loops_dropped, edges.display());
            }
            let n = parsed.graph.node_count();
            let features = match features {
                Some(p) => load_features(p, n)?,
                None => Matrix::identity(n),
            };
            let labels = labels.as_ref().map(|p| load_labels(p, n)).transpose()?;
            Ok(Dataset {
                graph: parsed.graph,
                features,
                labels,
            })
        }
    }
}

/// Samples are addressed by id: node ids for node classification, indices
/// into a pair table for link prediction.
#[derive(Debug, Clone)]
pub enum SampleTable {
    Nodes,
    Pairs(Vec<Edge>),
}

/// A held-out evaluation set with ground-truth labels.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub nodes: Vec<usize>,
    pub pairs: Vec<Edge>,
    pub labels: Vec<usize>,
}

impl EvalSet {
    pub fn query(&self) -> Query<'_> {
        if self.pairs.is_empty() {
            Query::Nodes(&self.nodes)
        } else {
            Query::Pairs(&self.pairs)
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Everything a run needs for one seed.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub task: TaskKind,
    pub graph: SparseGraph,
    pub features: Matrix,
    pub class_count: usize,
    pub samples: SampleTable,
    /// Initially observed `(sample, label)` pairs.
    pub observed: Vec<(usize, usize)>,
    /// Initial candidate pool `Ŷ_u`.
    pub pool: Vec<usize>,
    /// Ground truth per sample id, where known.
    pub truth: Vec<Option<usize>>,
    pub val: EvalSet,
    pub test: EvalSet,
    /// Link task: observed training edges (message-passing base graph).
    pub train_edges: Vec<Edge>,
    pub pool_description: String,
}

impl TaskData {
    pub fn build(cfg: &ExperimentConfig, dataset: &Dataset, run_seed: u64) -> Result<Self> {
        let split_seed = seed::derive(run_seed, stream::SPLIT);
        match cfg.task {
            TaskKind::Node => Self::node(cfg, dataset, split_seed),
            TaskKind::Link => Self::link(cfg, dataset, split_seed, seed::derive(run_seed, stream::POOL)),
        }
    }

    fn node(cfg: &ExperimentConfig, d: &Dataset, split_seed: u64) -> Result<Self> {
        let labels = d
            .labels
            .as_ref()
            .ok_or_else(|| Error::Config("node task requires labels".into()))?;
        let split = split_nodes(labels, cfg.split_ratios(), split_seed)?;
        let n = d.graph.node_count();
        let observed: Vec<(usize, usize)> = split
            .train_idx
            .iter()
            .map(|&v| (v, labels.get(v).expect("split nodes are labeled")))
            .collect();
        let mut is_train = vec![false; n];
        split.train_idx.iter().for_each(|&v| is_train[v] = true);
        let pool: Vec<usize> = (0..n).filter(|&v| !is_train[v]).collect();
        let eval = |idx: &[usize]| EvalSet {
            nodes: idx.to_vec(),
            pairs: Vec::new(),
            labels: idx.iter().map(|&v| labels.get(v).expect("split nodes are labeled")).collect(),
        };
        Ok(Self {
            task: TaskKind::Node,
            graph: d.graph.clone(),
            features: d.features.clone(),
            class_count: labels.class_count(),
            samples: SampleTable::Nodes,
            pool_description: format!("all {} non-training nodes", pool.len()),
            observed,
            pool,
            truth: labels.as_slice().to_vec(),
            val: eval(&split.val_idx),
            test: eval(&split.test_idx),
            train_edges: Vec::new(),
        })
    }

    fn link(cfg: &ExperimentConfig, d: &Dataset, split_seed: u64, pool_seed: u64) -> Result<Self> {
        let split = split_edges(&d.graph, cfg.split_ratios(), split_seed)?;
        if split.train_pos.is_empty() {
            return Err(Error::Data("no training edges after the split".into()));
        }
        let n = d.graph.node_count();
        let train_graph = SparseGraph::from_edges(n, split.train_pos.iter().copied())?;
        let (candidates, pool_description) = candidate_pairs(&train_graph, &cfg.candidate_pool, pool_seed)?;
        let mut pairs = split.train_pos.clone();
        let observed = (0..pairs.len()).map(|i| (i, 1)).collect();
        let pool = (pairs.len()..pairs.len() + candidates.len()).collect();
        pairs.extend(candidates);
        let truth = pairs
            .iter()
            .map(|&(i, j)| Some(usize::from(d.graph.has_edge(i, j))))
            .collect();
        let EdgeSplit {
            train_pos,
            val_pos,
            test_pos,
            val_neg,
            test_neg,
            ..
        } = split;
        Ok(Self {
            task: TaskKind::Link,
            graph: d.graph.clone(),
            features: d.features.clone(),
            class_count: 2,
            samples: SampleTable::Pairs(pairs),
            observed,
            pool,
            truth,
            val: link_eval(val_pos, val_neg),
            test: link_eval(test_pos, test_neg),
            train_edges: train_pos,
            pool_description,
        })
    }

    pub fn head(&self) -> Head {
        match self.task {
            TaskKind::Node => Head::Classification,
            TaskKind::Link => Head::Link,
        }
    }

    pub fn pair(&self, id: usize) -> Edge {
        match &self.samples {
            SampleTable::Pairs(p) => p[id],
            SampleTable::Nodes => panic!("pair lookup on a node task"),
        }
    }

    /// Owned query over sample ids.
    pub fn query_of(&self, ids: &[usize]) -> OwnedQuery {
        match &self.samples {
            SampleTable::Nodes => OwnedQuery::Nodes(ids.to_vec()),
            SampleTable::Pairs(p) => OwnedQuery::Pairs(ids.iter().map(|&i| p[i]).collect()),
        }
    }

    /// Message-passing graph given the currently observed samples. Node
    /// tasks use the full graph; link tasks use observed positive edges.
    pub fn message_graph(&self, observed: &[(usize, usize)]) -> Result<SparseGraph> {
        match &self.samples {
            SampleTable::Nodes => Ok(self.graph.clone()),
            SampleTable::Pairs(p) => SparseGraph::from_edges(
                self.graph.node_count(),
                observed.iter().filter(|&&(_, y)| y == 1).map(|&(i, _)| p[i]),
            ),
        }
    }

    /// Ground truth for every id, or `None` if any is unknown.
    pub fn truth_of(&self, ids: &[usize]) -> Option<Vec<usize>> {
        ids.iter().map(|&i| self.truth[i]).collect()
    }
}

#[derive(Debug, Clone)]
pub enum OwnedQuery {
    Nodes(Vec<usize>),
    Pairs(Vec<Edge>),
}

impl OwnedQuery {
    pub fn as_query(&self) -> Query<'_> {
        match self {
            OwnedQuery::Nodes(v) => Query::Nodes(v),
            OwnedQuery::Pairs(p) => Query::Pairs(p),
        }
    }
}

fn link_eval(pos: Vec<Edge>, neg: Vec<Edge>) -> EvalSet {
    let labels = std::iter::repeat_n(1, pos.len())
        .chain(std::iter::repeat_n(0, neg.len()))
        .collect();
    let mut pairs = pos;
    pairs.extend(neg);
    EvalSet {
        nodes: Vec::new(),
        pairs,
        labels,
    }
}

/// Unordered pairs not among the observed edges: exhaustive for small
/// graphs, a seeded uniform sample otherwise.
fn candidate_pairs(observed: &SparseGraph, cfg: &PoolConfig, seed: u64) -> Result<(Vec<Edge>, String)> {
    let n = observed.node_count();
    if n <= cfg.full_max_nodes {
        let pairs: Vec<Edge> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !observed.has_edge(i, j))
            .collect();
        let desc = format!("all {} unordered non-observed pairs", pairs.len());
        return Ok((pairs, desc));
    }
    let available = n * (n - 1) / 2 - observed.edge_count();
    let size = cfg.sample_size.min(available);
    let mut rng = seed::rng(seed);
    let mut pairs = graph::sample_non_edges(observed, size, &mut rng)?;
    pairs.sort_unstable();
    let desc = format!("uniform sample of {size} non-observed pairs (seed {seed}) out of {available}");
    Ok((pairs, desc))
}

