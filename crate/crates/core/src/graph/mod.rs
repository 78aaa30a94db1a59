//! Undirected graph storage, dataset ingestion, SBM generation and
//! train/validation/test splitting.

mod io;
mod sbm;
mod split;

pub use io::{
    load_edge_list, load_features, load_labels, parse_edge_list, parse_features, parse_labels,
    write_edge_list, write_features, write_labels, ParsedEdgeList,
};
pub use sbm::{generate_sbm, sbm_features};
pub use split::{split_edges, split_nodes, EdgeSplit, NodeSplit};
pub(crate) use split::sample_non_edges;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Dense node feature matrix `N × F`.
pub type FeatureMatrix = Matrix;

/// An undirected edge stored with `i < j`.
pub type Edge = (usize, usize);

#[inline]
pub fn canonical(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Symmetric CSR adjacency without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    node_count: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparseGraph {
    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            row_offsets: vec![0; node_count + 1],
            col_indices: Vec::new(),
        }
    }

    /// Builds the graph from arbitrary node pairs. Both orientations of a
    /// pair collapse to one undirected edge; self-loops are discarded.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for (i, j) in edges {
            for v in [i, j] {
                if v >= node_count {
                    return Err(Error::OutOfRange {
                        what: "nodes",
                        index: v,
                        len: node_count,
                    });
                }
            }
            if i == j {
                continue;
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        let mut row_offsets = Vec::with_capacity(node_count + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for mut nbrs in adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
            col_indices.extend(nbrs);
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            node_count,
            row_offsets,
            col_indices,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count && j < self.node_count && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.node_count {
            out.extend(self.neighbors(i).iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Returns a new graph with `extra` edges added.
    pub fn with_edges(&self, extra: &[Edge]) -> Result<Self> {
        Self::from_edges(
            self.node_count,
            self.edges().into_iter().chain(extra.iter().copied()),
        )
    }
}

/// Weighted symmetric CSR matrix; used for the normalized propagation operator.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn row(&self, v: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[v]..self.row_offsets[v + 1];
        (&self.col_indices[r.clone()], &self.weights[r])
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (cols, w) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| w[p])
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Sparse-dense product `self · x`.
    pub fn spmm(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.node_count {
            return Err(Error::Shape(format!(
                "propagation over {} nodes applied to {} rows",
                self.node_count,
                x.rows()
            )));
        }
        let mut out = Matrix::zeros(self.node_count, x.cols());
        for i in 0..self.node_count {
            let (cols, w) = self.row(i);
            let o = out.row_mut(i);
            for (&j, &a) in cols.iter().zip(w) {
                for (ov, &xv) in o.iter_mut().zip(x.row(j)) {
                    *ov += a * xv;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.node_count, self.node_count);
        for i in 0..self.node_count {
            let (cols, w) = self.row(i);
            for (&j, &a) in cols.iter().zip(w) {
                m.set(i, j, a);
            }
        }
        m
    }
}

/// Symmetric normalization with self-loops: `D̃^{-1/2}(A+I)D̃^{-1/2}`.
pub fn normalize_adjacency(g: &SparseGraph) -> WeightedGraph {
    let n = g.node_count();
    let deg: Vec<f64> = (0..n).map(|v| (g.degree(v) + 1) as f64).collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(g.col_indices().len() + n);
    let mut weights = Vec::with_capacity(g.col_indices().len() + n);
    row_offsets.push(0);
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let split = nbrs.partition_point(|&j| j < i);
        let cols = nbrs[..split]
            .iter()
            .copied()
            .chain(std::iter::once(i))
            .chain(nbrs[split..].iter().copied());
        for j in cols {
            col_indices.push(j);
            weights.push(1.0 / (deg[i] * deg[j]).sqrt());
        }
        row_offsets.push(col_indices.len());
    }
    WeightedGraph {
        node_count: n,
        row_offsets,
        col_indices,
        weights,
    }
}

/// Per-node class labels; `None` marks an unlabeled node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabels {
    labels: Vec<Option<usize>>,
    class_count: usize,
}

impl NodeLabels {
    pub fn new(labels: Vec<Option<usize>>, class_count: usize) -> Result<Self> {
        if let Some((node, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&c| c >= class_count).map(|c| (i, c)))
        {
            return Err(Error::Data(format!(
                "node {node} has label {c} but only {class_count} classes exist"
            )));
        }
        Ok(Self {
            labels,
            class_count,
        })
    }

    #[inline]
    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.labels
    }
}
