#![allow(dead_code)]

use cpl_core::augment::MaskPair;
use cpl_core::config::ExperimentConfig;
use cpl_core::graph::{normalize_adjacency, SparseGraph, WeightedGraph};
use cpl_core::seed;
use cpl_core::tensor::{
    binary_cross_entropy, class_cross_entropy, classify, decode_links, link_logits_backward, GcnModel, Gradients, Head,
    Matrix,
};
use rand::Rng;

pub const NODE_CONFIG: &str = include_str!("../../../../configs/node_sbm.json");
pub const LINK_CONFIG: &str = include_str!("../../../../configs/link_sbm.json");

pub fn node_config() -> ExperimentConfig {
    ExperimentConfig::from_json(NODE_CONFIG).unwrap()
}

pub fn link_config() -> ExperimentConfig {
    ExperimentConfig::from_json(LINK_CONFIG).unwrap()
}

pub fn random_graph(n: usize, p: f64, rng: &mut seed::Rng) -> SparseGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SparseGraph::from_edges(n, edges).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut seed::Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub const FD_STEP: f64 = 1e-5;

/// A random differentiable problem for one head: graph, features, model and
/// the targets its loss is taken over.
pub struct GradProblem {
    pub adj: WeightedGraph,
    pub x: Matrix,
    pub model: GcnModel,
    pub nodes: Vec<(usize, usize)>,
    pub pairs: Vec<(usize, usize)>,
    pub ys: Vec<f64>,
}

pub fn grad_problem(head: Head, seed: u64) -> GradProblem {
    let mut rng = seed::rng(seed);
    let n = rng.random_range(6..=20);
    let f = rng.random_range(2..=6);
    let h = rng.random_range(2..=8);
    let out = rng.random_range(2..=5);
    let g = random_graph(n, 0.3, &mut rng);
    let x = random_matrix(n, f, &mut rng);
    let adj = normalize_adjacency(&g);
    let ax = adj.spmm(&x).unwrap();
    let reach = FD_STEP * ax.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Central differences are meaningless across a ReLU kink: redraw the
    // weights until no hidden pre-activation is within one step of zero.
    let model = loop {
        let m = GcnModel::new(head, f, h, out, rng.random()).unwrap();
        let z1 = m.forward(&adj, &x).unwrap().z1;
        if z1.as_slice().iter().all(|z| z.abs() > 10.0 * reach) {
            break m;
        }
    };
    let mut nodes = Vec::new();
    let mut pairs = Vec::new();
    let mut ys = Vec::new();
    match head {
        Head::Classification => {
            for v in 0..n {
                if rng.random::<f64>() < 0.6 {
                    nodes.push((v, rng.random_range(0..out)));
                }
            }
            if nodes.is_empty() {
                nodes.push((0, 0));
            }
        }
        Head::Link => {
            for _ in 0..2 * n {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    pairs.push((i.min(j), i.max(j)));
                    ys.push(f64::from(u8::from(rng.random::<bool>())));
                }
            }
        }
    }
    GradProblem {
        adj,
        x,
        model,
        nodes,
        pairs,
        ys,
    }
}

impl GradProblem {
    pub fn loss(&self, model: &GcnModel) -> f64 {
        let out = model.forward(&self.adj, &self.x).unwrap().out;
        match model.head {
            Head::Classification => class_cross_entropy(&classify(&out), &self.nodes).unwrap().0,
            Head::Link => binary_cross_entropy(&decode_links(&out, &self.pairs).unwrap(), &self.ys).unwrap().0,
        }
    }

    pub fn analytic(&self) -> Gradients {
        let cache = self.model.forward(&self.adj, &self.x).unwrap();
        let grad_out = match self.model.head {
            Head::Classification => class_cross_entropy(&classify(&cache.out), &self.nodes).unwrap().1,
            Head::Link => {
                let conf = decode_links(&cache.out, &self.pairs).unwrap();
                let g = binary_cross_entropy(&conf, &self.ys).unwrap().1;
                link_logits_backward(&cache.out, &self.pairs, &g).unwrap()
            }
        };
        self.model.backward(&self.adj, &self.x, &cache, &grad_out).unwrap()
    }

    /// Largest relative error between analytic and central-difference
    /// gradients over every weight entry.
    pub fn max_relative_error(&self) -> f64 {
        let h = FD_STEP;
        let analytic = self.analytic();
        let mut worst = 0.0f64;
        for layer in 0..2 {
            let len = if layer == 0 {
                self.model.params.w1.as_slice().len()
            } else {
                self.model.params.w2.as_slice().len()
            };
            for idx in 0..len {
                let eval = |delta: f64| {
                    let mut m = self.model.clone();
                    let w = if layer == 0 { &mut m.params.w1 } else { &mut m.params.w2 };
                    w.as_mut_slice()[idx] += delta;
                    self.loss(&m)
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let a = if layer == 0 {
                    analytic.w1.as_slice()[idx]
                } else {
                    analytic.w2.as_slice()[idx]
                };
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((a - numeric).abs() / denom);
            }
        }
        worst
    }
}

/// Probability a random positive outscores a random negative, ties 0.5,
/// over every pair.
pub fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            total += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / total
}

/// `Σ_n (R_n − R_{n−1}) P_n` over descending distinct thresholds, each
/// precision/recall recounted from scratch.
pub fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for &tau in &thresholds {
        let above: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= tau).collect();
        let tp = above.iter().filter(|&&i| labels[i]).count() as f64;
        let recall = tp / positives;
        let precision = tp / above.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// `‖1−M_x‖²/(N·F) + ‖1−M_a‖²/N²` with both masks materialized densely.
pub fn dense_epsilon(m: &MaskPair, g: &SparseGraph, f: usize) -> f64 {
    let n = g.node_count();
    let mut mx = vec![vec![1.0f64; f]; n];
    for (v, cols) in m.dropped_features.iter().enumerate() {
        for &c in cols {
            mx[v][c] = 0.0;
        }
    }
    let mut ma = vec![vec![1.0f64; n]; n];
    for (&(i, j), &keep) in g.edges().iter().zip(&m.edge_keep) {
        if !keep {
            ma[i][j] = 0.0;
            ma[j][i] = 0.0;
        }
    }
    let fx: f64 = mx.iter().flatten().map(|v| (1.0 - v) * (1.0 - v)).sum();
    let fa: f64 = ma.iter().flatten().map(|v| (1.0 - v) * (1.0 - v)).sum();
    fx / (n as f64 * f as f64) + fa / (n as f64 * n as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
