//! Two-layer GCN `out = Â·ReLU(Â·X·W1)·W2` with hand-derived gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub init_seed: u64,
}

/// Gradients shaped like [`GcnParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub w2: Matrix,
}

impl Gradients {
    pub fn zeros_like(p: &GcnParams) -> Self {
        Self {
            w1: Matrix::zeros(p.w1.rows(), p.w1.cols()),
            w2: Matrix::zeros(p.w2.rows(), p.w2.cols()),
        }
    }
}

/// Glorot/Xavier uniform in `±√(6/(fan_in+fan_out))`.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot initialize a {rows}x{cols} weight matrix"
        )));
    }
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = seed::rng(seed);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

impl GcnParams {
    pub fn init(input: usize, hidden: usize, output: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            w1: glorot_init(input, hidden, seed::derive(seed, 0))?,
            w2: glorot_init(hidden, output, seed::derive(seed, 1))?,
            init_seed: seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub z1: Matrix,
    pub h1: Matrix,
    pub out: Matrix,
}

fn ensure_finite(m: &Matrix, layer: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(layer.to_string()))
    }
}

pub fn gcn_forward(adj: &WeightedGraph, x: &Matrix, p: &GcnParams) -> Result<ForwardCache> {
    if x.rows() != adj.node_count() || x.cols() != p.w1.rows() || p.w1.cols() != p.w2.rows() {
        return Err(Error::Shape(format!(
            "graph with {} nodes, features {}x{}, w1 {}x{}, w2 {}x{}",
            adj.node_count(),
            x.rows(),
            x.cols(),
            p.w1.rows(),
            p.w1.cols(),
            p.w2.rows(),
            p.w2.cols()
        )));
    }
    let z1 = adj.spmm(&x.matmul(&p.w1)?)?;
    ensure_finite(&z1, "hidden layer pre-activation")?;
    let h1 = z1.map(|v| v.max(0.0));
    let out = adj.spmm(&h1.matmul(&p.w2)?)?;
    ensure_finite(&out, "output layer")?;
    Ok(ForwardCache { z1, h1, out })
}

/// Gradients of a scalar loss w.r.t. both weight matrices given
/// `grad_out = ∂loss/∂out`. Relies on `Â` being symmetric.
pub fn gcn_backward(
    adj: &WeightedGraph,
    x: &Matrix,
    p: &GcnParams,
    cache: &ForwardCache,
    grad_out: &Matrix,
) -> Result<Gradients> {
    if grad_out.shape() != cache.out.shape() {
        return Err(Error::Shape(format!(
            "output gradient {:?} vs output {:?}",
            grad_out.shape(),
            cache.out.shape()
        )));
    }
    let ag = adj.spmm(grad_out)?;
    let w2 = cache.h1.t_matmul(&ag)?;
    let mut dz1 = ag.matmul_t(&p.w2)?;
    for (d, &z) in dz1.as_mut_slice().iter_mut().zip(cache.z1.as_slice()) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    let w1 = x.t_matmul(&adj.spmm(&dz1)?)?;
    Ok(Gradients { w1, w2 })
}
