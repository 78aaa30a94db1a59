use serde::{Deserialize, Serialize};

use super::{
    classify_rows, decode_links, gcn_backward, gcn_forward, Confidence, ForwardCache, GcnParams,
    Gradients, Matrix,
};
use crate::error::Result;
use crate::graph::{Edge, WeightedGraph};

/// Which prediction head sits on top of the GCN output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Output rows are class logits.
    Classification,
    /// Output rows are node embeddings decoded by `σ(e_i·e_j)`.
    Link,
}

/// Samples a confidence is requested for.
#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    Nodes(&'a [usize]),
    Pairs(&'a [Edge]),
}

impl Query<'_> {
    pub fn len(&self) -> usize {
        match self {
            Query::Nodes(n) => n.len(),
            Query::Pairs(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The base GNN `g`. Teacher and student are two instances of this type.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub params: GcnParams,
    pub head: Head,
}

impl GcnModel {
    pub fn new(head: Head, input: usize, hidden: usize, output: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            params: GcnParams::init(input, hidden, output, seed)?,
            head,
        })
    }

    pub fn forward(&self, adj: &WeightedGraph, x: &Matrix) -> Result<ForwardCache> {
        gcn_forward(adj, x, &self.params)
    }

    pub fn backward(&self, adj: &WeightedGraph, x: &Matrix, cache: &ForwardCache, grad_out: &Matrix) -> Result<Gradients> {
        gcn_backward(adj, x, &self.params, cache, grad_out)
    }

    /// Confidence of the queried samples given a forward output.
    pub fn confidence_from(&self, out: &Matrix, query: Query<'_>) -> Result<Confidence> {
        match query {
            Query::Nodes(nodes) => classify_rows(out, nodes),
            Query::Pairs(pairs) => decode_links(out, pairs),
        }
    }

    pub fn confidence(&self, adj: &WeightedGraph, x: &Matrix, query: Query<'_>) -> Result<Confidence> {
        let cache = self.forward(adj, x)?;
        self.confidence_from(&cache.out, query)
    }
}
