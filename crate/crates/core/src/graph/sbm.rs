use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FeatureMatrix, NodeLabels, SparseGraph};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Matrix;

/// Stochastic block model. Nodes are numbered block by block and labeled by
/// block index. Pairs are visited in lexicographic order with one uniform
/// draw each, so the output depends only on the arguments.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(SparseGraph, NodeLabels)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::InvalidArgument("block sizes must be positive".into()));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("{name}={p} is not a probability")));
        }
    }
    let block: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = block.len();
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block[i] == block[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = SparseGraph::from_edges(n, edges)?;
    let labels = NodeLabels::new(block.into_iter().map(Some).collect(), block_sizes.len())?;
    Ok((graph, labels))
}

/// Gaussian class-conditional features: each class draws a centroid from
/// `N(0, I)`, and node `v` gets `signal · centroid[y_v] + N(0, I)`.
/// Unlabeled nodes get pure noise.
pub fn sbm_features(labels: &NodeLabels, dim: usize, signal: f64, seed: u64) -> Result<FeatureMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("feature dimension must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let centroids: Vec<Vec<f64>> = (0..labels.class_count())
        .map(|_| (0..dim).map(|_| normal()).collect())
        .collect();
    let mut x = Matrix::zeros(labels.len(), dim);
    for v in 0..labels.len() {
        let row = x.row_mut(v);
        for (f, cell) in row.iter_mut().enumerate() {
            let mean = labels.get(v).map_or(0.0, |c| signal * centroids[c][f]);
            *cell = mean + normal();
        }
    }
    Ok(x)
}
