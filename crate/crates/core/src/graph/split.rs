use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{canonical, Edge, NodeLabels, SparseGraph};
use crate::error::{Error, Result};
use crate::seed;

/// Positive edges partitioned into train/val/test plus fixed negative pairs
/// for validation and test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train_pos: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

/// Uniform random partition of the undirected edges. Validation and test
/// negatives are drawn once, uniformly from non-edges, without repetition.
pub fn split_edges(g: &SparseGraph, ratios: [f64; 3], seed: u64) -> Result<EdgeSplit> {
    check_ratios(ratios)?;
    let mut edges = g.edges();
    let total = edges.len();
    let n_train = (ratios[0] * total as f64).round() as usize;
    let n_val = ((ratios[1] * total as f64).round() as usize).min(total - n_train.min(total));
    if n_train > total {
        return Err(Error::InvalidArgument("graph too small for requested split".into()));
    }
    let n_test = total - n_train - n_val;
    for (name, ratio, size) in [("train", ratios[0], n_train), ("val", ratios[1], n_val), ("test", ratios[2], n_test)] {
        if size == 0 {
            if ratio > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "graph with {total} edges too small for a non-empty {name} part"
                )));
            }
            warn!("edge split: {name} part is empty");
        }
    }

    let mut rng = seed::rng(seed);
    edges.shuffle(&mut rng);
    let test_pos = edges.split_off(n_train + n_val);
    let val_pos = edges.split_off(n_train);
    let train_pos = edges;

    let mut negatives = sample_non_edges(g, n_val + n_test, &mut rng)?;
    let test_neg = negatives.split_off(n_val);
    Ok(EdgeSplit {
        train_pos,
        val_pos,
        test_pos,
        val_neg: negatives,
        test_neg,
        split_seed: seed,
    })
}

/// Draws `count` distinct unordered non-adjacent pairs uniformly.
pub(crate) fn sample_non_edges(g: &SparseGraph, count: usize, rng: &mut seed::Rng) -> Result<Vec<Edge>> {
    let n = g.node_count();
    let all_pairs = n * n.saturating_sub(1) / 2;
    let available = all_pairs - g.edge_count();
    if count > available {
        return Err(Error::InvalidArgument(format!(
            "requested {count} negative pairs but only {available} non-edges exist"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if count * 2 > available {
        let mut pool: Vec<Edge> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        let (chosen, _) = pool.partial_shuffle(rng, count);
        return Ok(chosen.to_vec());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || g.has_edge(i, j) {
            continue;
        }
        let e = canonical(i, j);
        if seen.insert(e) {
            out.push(e);
        }
    }
    Ok(out)
}

/// Stratified node split over labeled nodes. Part totals are
/// `round(ratio · labeled)` for train and validation with the remainder in
/// test; each part's total is spread over classes by largest remainder.
pub fn split_nodes(labels: &NodeLabels, ratios: [f64; 3], seed: u64) -> Result<NodeSplit> {
    check_ratios(ratios)?;
    let classes = labels.class_count();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (v, l) in labels.as_slice().iter().enumerate() {
        if let Some(c) = l {
            by_class[*c].push(v);
        }
    }
    let parts = ratios.iter().filter(|&&r| r > 0.0).count();
    if let Some((c, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < parts) {
        return Err(Error::InvalidArgument(format!(
            "class {c} has {} labeled nodes, fewer than the {parts} split parts",
            members.len()
        )));
    }
    let labeled: usize = by_class.iter().map(Vec::len).sum();
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let train = allocate(
        (ratios[0] * labeled as f64).round() as usize,
        ratios[0],
        &sizes,
        usize::from(ratios[0] > 0.0),
    );
    let remaining: Vec<usize> = sizes.iter().zip(&train).map(|(s, t)| s - t).collect();
    let val = allocate(
        ((ratios[1] * labeled as f64).round() as usize).min(remaining.iter().sum()),
        ratios[1],
        &remaining,
        0,
    );
    if let Some(c) = train.iter().position(|&t| t == 0) {
        return Err(Error::InvalidArgument(format!(
            "train ratio {} leaves class {c} without training nodes",
            ratios[0]
        )));
    }

    let mut rng = seed::rng(seed);
    let mut split = NodeSplit {
        train_idx: Vec::new(),
        val_idx: Vec::new(),
        test_idx: Vec::new(),
    };
    for (c, mut members) in by_class.into_iter().enumerate() {
        members.shuffle(&mut rng);
        let rest = members.split_off(train[c]);
        split.train_idx.extend(members);
        let (v, t) = rest.split_at(val[c]);
        split.val_idx.extend_from_slice(v);
        split.test_idx.extend_from_slice(t);
    }
    split.train_idx.sort_unstable();
    split.val_idx.sort_unstable();
    split.test_idx.sort_unstable();
    Ok(split)
}

/// Largest-remainder apportionment of `total` over classes proportional to
/// `ratio · size`, capped by `capacity`, with at least `min_each` per class.
/// Ties go to the lower class index.
fn allocate(total: usize, ratio: f64, capacity: &[usize], min_each: usize) -> Vec<usize> {
    let quotas: Vec<f64> = capacity.iter().map(|&s| ratio * s as f64).collect();
    let mut out: Vec<usize> = quotas
        .iter()
        .zip(capacity)
        .map(|(q, &cap)| (q.floor() as usize).max(min_each).min(cap))
        .collect();
    let mut order: Vec<usize> = (0..capacity.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = out.iter().sum();
    while assigned < total {
        let before = assigned;
        for &c in &order {
            if assigned == total {
                break;
            }
            if out[c] < capacity[c] {
                out[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_sbm;
    use proptest::prelude::*;

    fn path_graph(n: usize) -> SparseGraph {
        SparseGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn ten_edges_split_one_four_five() {
        let s = split_edges(&path_graph(11), [0.1, 0.4, 0.5], 3).unwrap();
        assert_eq!((s.train_pos.len(), s.val_pos.len(), s.test_pos.len()), (1, 4, 5));
        assert_eq!(s.val_neg.len(), 4);
        assert_eq!(s.test_neg.len(), 5);
    }

    #[test]
    fn all_train_leaves_empty_eval_parts() {
        let s = split_edges(&path_graph(6), [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(s.train_pos.len(), 5);
        assert!(s.val_pos.is_empty() && s.test_pos.is_empty() && s.test_neg.is_empty());
    }

    #[test]
    fn too_small_graph_rejected() {
        assert!(split_edges(&path_graph(3), [0.1, 0.4, 0.5], 0).is_err());
        assert!(split_edges(&path_graph(3), [0.5, 0.6, 0.0], 0).is_err());
    }

    #[test]
    fn negatives_exhaustively_avoid_edges() {
        let (g, _) = generate_sbm(&[100, 100], 0.1, 0.01, 5).unwrap();
        let s = split_edges(&g, [0.1, 0.4, 0.5], 17).unwrap();
        let mut all_neg: Vec<_> = s.val_neg.iter().chain(&s.test_neg).copied().collect();
        for &(i, j) in &all_neg {
            assert!(i < j);
            assert!(!g.has_edge(i, j));
        }
        let len = all_neg.len();
        all_neg.sort_unstable();
        all_neg.dedup();
        assert_eq!(all_neg.len(), len);
    }

    #[test]
    fn dense_graph_uses_enumeration_path() {
        let (g, _) = generate_sbm(&[8, 8], 0.5, 0.2, 2).unwrap();
        let s = split_edges(&g, [0.2, 0.4, 0.4], 1).unwrap();
        for &(i, j) in s.val_neg.iter().chain(&s.test_neg) {
            assert!(!g.has_edge(i, j));
        }
    }

    #[test]
    fn stratified_five_fifteen_eighty() {
        let labels = NodeLabels::new((0..100).map(|v| Some(v / 50)).collect(), 2).unwrap();
        let s = split_nodes(&labels, [0.05, 0.15, 0.80], 1).unwrap();
        assert_eq!((s.train_idx.len(), s.val_idx.len(), s.test_idx.len()), (5, 15, 80));
        let train_per_class: Vec<usize> = (0..2)
            .map(|c| s.train_idx.iter().filter(|&&v| v / 50 == c).count())
            .collect();
        assert!(train_per_class.iter().all(|&t| t == 2 || t == 3));
        assert_eq!(s, split_nodes(&labels, [0.05, 0.15, 0.80], 1).unwrap());
    }

    #[test]
    fn empty_train_rejected() {
        let labels = NodeLabels::new((0..10).map(|v| Some(v % 2)).collect(), 2).unwrap();
        assert!(split_nodes(&labels, [0.0, 0.0, 1.0], 1).is_err());
        let tiny = NodeLabels::new(vec![Some(0), Some(0), Some(1)], 2).unwrap();
        assert!(split_nodes(&tiny, [0.4, 0.3, 0.3], 1).is_err());
    }

    proptest! {
        #[test]
        fn edge_partition_reproduces_edge_set(seed in any::<u64>(), gseed in 0u64..50) {
            let (g, _) = generate_sbm(&[15, 15], 0.4, 0.05, gseed).unwrap();
            let s = split_edges(&g, [0.1, 0.4, 0.5], seed).unwrap();
            let mut union: Vec<_> = s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos).copied().collect();
            union.sort_unstable();
            prop_assert_eq!(union, g.edges());
            prop_assert_eq!(&s, &split_edges(&g, [0.1, 0.4, 0.5], seed).unwrap());
            for &(i, j) in s.val_neg.iter().chain(&s.test_neg) {
                prop_assert!(!g.has_edge(i, j));
            }
        }

        #[test]
        fn node_split_parts_are_disjoint(seed in any::<u64>(), n in 12usize..80) {
            let labels = NodeLabels::new((0..n).map(|v| Some(v % 3)).collect(), 3).unwrap();
            let s = split_nodes(&labels, [0.2, 0.3, 0.5], seed).unwrap();
            let mut all: Vec<_> = s.train_idx.iter().chain(&s.val_idx).chain(&s.test_idx).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
