//! Text formats.
//!
//! Edge list: one `src dst` pair per line, `#` starts a comment, and an
//! optional first data line `N <count>` declares the node count. Without the
//! header the node count is `max id + 1`.
//!
//! Features: headerless CSV of floats, one row per node.
//!
//! Labels: CSV `node_id,label`, optionally preceded by that literal header.
//! Nodes absent from the file are unlabeled.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::{FeatureMatrix, NodeLabels, SparseGraph};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: SparseGraph,
    pub self_loops_dropped: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<ParsedEdgeList> {
    let parsed = parse_edge_list(&read(path.as_ref())?)?;
    if parsed.self_loops_dropped > 0 {
        warn!(
            "{}: dropped {} self-loop line(s)",
            path.as_ref().display(),
            parsed.self_loops_dropped
        );
    }
    Ok(parsed)
}

pub fn parse_edge_list(text: &str) -> Result<ParsedEdgeList> {
    let mut declared: Option<usize> = None;
    let mut seen_data = false;
    let mut pairs = Vec::new();
    let mut self_loops = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = (fields.next(), fields.next());
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two fields, got `{line}`"),
            });
        }
        if !seen_data && a == Some("N") {
            let n = b.and_then(|s| s.parse::<usize>().ok()).ok_or(Error::Parse {
                line: line_no,
                message: format!("malformed node-count header `{line}`"),
            })?;
            declared = Some(n);
            seen_data = true;
            continue;
        }
        seen_data = true;
        let parse = |s: Option<&str>| {
            s.and_then(|s| s.parse::<usize>().ok()).ok_or(Error::Parse {
                line: line_no,
                message: format!("expected two non-negative integer node ids, got `{line}`"),
            })
        };
        let (i, j) = (parse(a)?, parse(b)?);
        if let Some(n) = declared {
            if i >= n || j >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node id {} exceeds declared N={n}", i.max(j)),
                });
            }
        }
        if i == j {
            self_loops += 1;
            continue;
        }
        pairs.push((i, j));
    }
    let n = declared.unwrap_or_else(|| pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
    Ok(ParsedEdgeList {
        graph: SparseGraph::from_edges(n, pairs)?,
        self_loops_dropped: self_loops,
    })
}

pub fn load_features(path: impl AsRef<Path>, n: usize) -> Result<FeatureMatrix> {
    parse_features(&read(path.as_ref())?, n)
}

pub fn parse_features(text: &str, n: usize) -> Result<FeatureMatrix> {
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = data.len();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("non-numeric feature cell `{}`", cell.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "non-finite feature value".into(),
                });
            }
            data.push(v);
        }
        let count = data.len() - start;
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("ragged row {}: {count} columns, expected {w}", rows),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Data(format!("feature file has {rows} rows, expected {n}")));
    }
    Matrix::from_vec(rows, width.unwrap_or(0), data)
}

pub fn load_labels(path: impl AsRef<Path>, n: usize) -> Result<NodeLabels> {
    parse_labels(&read(path.as_ref())?, n)
}

pub fn parse_labels(text: &str, n: usize) -> Result<NodeLabels> {
    let mut labels = vec![None; n];
    let mut max_class = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line == "node_id,label") {
            continue;
        }
        let err = || Error::Parse {
            line: idx + 1,
            message: format!("expected `node_id,label`, got `{line}`"),
        };
        let (node, label) = line.split_once(',').ok_or_else(err)?;
        let node: usize = node.trim().parse().map_err(|_| err())?;
        let label: usize = label.trim().parse().map_err(|_| err())?;
        if node >= n {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("node id {node} out of range for {n} nodes"),
            });
        }
        labels[node] = Some(label);
        max_class = max_class.max(Some(label));
    }
    NodeLabels::new(labels, max_class.map_or(0, |c| c + 1))
}

pub fn write_edge_list(path: impl AsRef<Path>, g: &SparseGraph) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "N {}", g.node_count());
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    write(path.as_ref(), &out)
}

pub fn write_features(path: impl AsRef<Path>, x: &FeatureMatrix) -> Result<()> {
    let mut out = String::new();
    for r in 0..x.rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    write(path.as_ref(), &out)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &NodeLabels) -> Result<()> {
    let mut out = String::from("node_id,label\n");
    for (i, l) in labels.as_slice().iter().enumerate() {
        if let Some(c) = l {
            let _ = writeln!(out, "{i},{c}");
        }
    }
    write(path.as_ref(), &out)
}
