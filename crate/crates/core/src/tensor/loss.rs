//! Prediction heads (inner-product link decoder, softmax classifier) and the
//! cross-entropy losses over them.

use serde::{Deserialize, Serialize};

use super::matrix::dot;
use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::Edge;

/// Probabilities clamp to `[PROB_FLOOR, 1 - PROB_FLOOR]` inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfidenceKind {
    /// One `σ(e_i·e_j)` per queried pair.
    EdgeScore,
    /// One probability row of length `classes` per queried node.
    ClassDistribution { classes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Confidence {
    values: Vec<f64>,
    kind: ConfidenceKind,
}

impl Confidence {
    pub fn new(values: Vec<f64>, kind: ConfidenceKind) -> Result<Self> {
        if let ConfidenceKind::ClassDistribution { classes } = kind {
            if classes == 0 || !values.len().is_multiple_of(classes) {
                return Err(Error::Shape(format!(
                    "{} values do not form rows of {classes} classes",
                    values.len()
                )));
            }
        }
        Ok(Self { values, kind })
    }

    pub fn kind(&self) -> ConfidenceKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn width(&self) -> usize {
        match self.kind {
            ConfidenceKind::EdgeScore => 1,
            ConfidenceKind::ClassDistribution { classes } => classes,
        }
    }

    /// Number of samples (pairs or nodes).
    pub fn len(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    /// Hard decision: argmax class (lowest index on ties) or `score ≥ 0.5`.
    pub fn decision(&self, i: usize) -> usize {
        match self.kind {
            ConfidenceKind::EdgeScore => usize::from(self.values[i] >= 0.5),
            ConfidenceKind::ClassDistribution { .. } => argmax(self.sample(i)),
        }
    }

    /// Probability assigned to `label` for sample `i`.
    pub fn prob_of(&self, i: usize, label: usize) -> f64 {
        match self.kind {
            ConfidenceKind::EdgeScore => {
                if label == 1 {
                    self.values[i]
                } else {
                    1.0 - self.values[i]
                }
            }
            ConfidenceKind::ClassDistribution { .. } => self.sample(i)[label],
        }
    }

    /// Element-wise mean of equally shaped confidences, accumulated in slice order.
    pub fn mean(views: &[Confidence]) -> Result<Confidence> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of zero confidences".into()))?;
        let mut acc = vec![0.0; first.values.len()];
        for v in views {
            if v.kind != first.kind || v.values.len() != acc.len() {
                return Err(Error::Shape("confidence views differ in shape".into()));
            }
            for (a, &x) in acc.iter_mut().zip(&v.values) {
                *a += x;
            }
        }
        let inv = views.len() as f64;
        acc.iter_mut().for_each(|a| *a /= inv);
        Ok(Confidence {
            values: acc,
            kind: first.kind,
        })
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_pairs(n: usize, pairs: &[Edge]) -> Result<()> {
    for &(i, j) in pairs {
        let bad = i.max(j);
        if bad >= n {
            return Err(Error::OutOfRange {
                what: "embedding rows",
                index: bad,
                len: n,
            });
        }
    }
    Ok(())
}

/// Inner products `e_i·e_j` for the requested pairs only.
pub fn link_logits(embeddings: &Matrix, pairs: &[Edge]) -> Result<Vec<f64>> {
    check_pairs(embeddings.rows(), pairs)?;
    Ok(pairs
        .iter()
        .map(|&(i, j)| dot(embeddings.row(i), embeddings.row(j)))
        .collect())
}

/// `σ(e_i·e_j)` for the requested pairs.
pub fn decode_links(embeddings: &Matrix, pairs: &[Edge]) -> Result<Confidence> {
    let values = link_logits(embeddings, pairs)?.into_iter().map(sigmoid).collect();
    Confidence::new(values, ConfidenceKind::EdgeScore)
}

fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = out.len();
    let mut sum = 0.0;
    for &l in logits {
        let e = (l - max).exp();
        sum += e;
        out.push(e);
    }
    out[start..].iter_mut().for_each(|v| *v /= sum);
}

/// Row-wise softmax of all rows.
pub fn classify(logits: &Matrix) -> Confidence {
    let rows: Vec<usize> = (0..logits.rows()).collect();
    classify_rows(logits, &rows).expect("row indices in range")
}

/// Row-wise softmax of the listed rows only.
pub fn classify_rows(logits: &Matrix, rows: &[usize]) -> Result<Confidence> {
    let mut values = Vec::with_capacity(rows.len() * logits.cols());
    for &r in rows {
        if r >= logits.rows() {
            return Err(Error::OutOfRange {
                what: "logit rows",
                index: r,
                len: logits.rows(),
            });
        }
        softmax_into(logits.row(r), &mut values);
    }
    Confidence::new(values, ConfidenceKind::ClassDistribution { classes: logits.cols() })
}

#[inline]
fn neg_log(p: f64) -> f64 {
    -p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln()
}

/// Cross-entropy of one sample against `label`.
pub fn sample_cross_entropy(conf: &Confidence, i: usize, label: usize) -> f64 {
    neg_log(conf.prob_of(i, label))
}

/// Mean softmax cross-entropy over `(node, class)` targets. `conf` must hold
/// every node's distribution (as from [`classify`]); the gradient is w.r.t.
/// the logits and is zero outside the target rows.
pub fn class_cross_entropy(conf: &Confidence, targets: &[(usize, usize)]) -> Result<(f64, Matrix)> {
    let ConfidenceKind::ClassDistribution { classes } = conf.kind() else {
        return Err(Error::InvalidArgument("class cross-entropy needs class distributions".into()));
    };
    if targets.is_empty() {
        return Err(Error::InvalidArgument("cross-entropy over an empty index set".into()));
    }
    let n = conf.len();
    let scale = 1.0 / targets.len() as f64;
    let mut grad = Matrix::zeros(n, classes);
    let mut loss = 0.0;
    for &(node, class) in targets {
        if node >= n || class >= classes {
            return Err(Error::OutOfRange {
                what: "class targets",
                index: node.max(class),
                len: n.max(classes),
            });
        }
        loss += sample_cross_entropy(conf, node, class);
        let row = grad.row_mut(node);
        for (g, &p) in row.iter_mut().zip(conf.sample(node)) {
            *g += scale * p;
        }
        row[class] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Mean binary cross-entropy of edge scores against 0/1 targets. The
/// gradient is w.r.t. the pre-sigmoid logits.
pub fn binary_cross_entropy(conf: &Confidence, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if conf.kind() != ConfidenceKind::EdgeScore {
        return Err(Error::InvalidArgument("binary cross-entropy needs edge scores".into()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("cross-entropy over an empty index set".into()));
    }
    if targets.len() != conf.len() {
        return Err(Error::Shape(format!(
            "{} targets for {} scores",
            targets.len(),
            conf.len()
        )));
    }
    let scale = 1.0 / targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(targets.len());
    for (&p, &y) in conf.values().iter().zip(targets) {
        loss += y * neg_log(p) + (1.0 - y) * neg_log(1.0 - p);
        grad.push(scale * (p - y));
    }
    Ok((loss * scale, grad))
}

/// Chains per-pair logit gradients back to the embedding matrix.
pub fn link_logits_backward(embeddings: &Matrix, pairs: &[Edge], grad_logits: &[f64]) -> Result<Matrix> {
    check_pairs(embeddings.rows(), pairs)?;
    if pairs.len() != grad_logits.len() {
        return Err(Error::Shape("one logit gradient per pair required".into()));
    }
    let mut grad = Matrix::zeros(embeddings.rows(), embeddings.cols());
    for (&(i, j), &g) in pairs.iter().zip(grad_logits) {
        if g == 0.0 {
            continue;
        }
        for c in 0..embeddings.cols() {
            let (ei, ej) = (embeddings.get(i, c), embeddings.get(j, c));
            let gi = grad.get(i, c);
            grad.set(i, c, gi + g * ej);
            let gj = grad.get(j, c);
            grad.set(j, c, gj + g * ei);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::glorot_init;

    #[test]
    fn orthogonal_embeddings_score_half() {
        let e = Matrix::identity(2);
        let c = decode_links(&e, &[(0, 1)]).unwrap();
        assert_eq!(c.values(), &[0.5]);
    }

    #[test]
    fn identical_unit_embeddings_score_sigmoid_one() {
        let e = Matrix::from_rows(&[vec![0.6, 0.8], vec![0.6, 0.8]]).unwrap();
        let c = decode_links(&e, &[(0, 1)]).unwrap();
        assert!((c.values()[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((c.values()[0] - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn decode_rejects_out_of_range_pairs() {
        assert!(decode_links(&Matrix::identity(2), &[(0, 2)]).is_err());
    }

    #[test]
    fn decode_matches_per_pair_oracle() {
        let e = glorot_init(30, 8, 4).unwrap();
        let pairs: Vec<_> = (0..50).map(|k| (k % 30, (k * 7 + 3) % 30)).collect();
        let c = decode_links(&e, &pairs).unwrap();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let mut s = 0.0;
            for f in 0..8 {
                s += e.get(i, f) * e.get(j, f);
            }
            let oracle = 1.0 / (1.0 + (-s).exp());
            assert!((c.values()[k] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let logits = Matrix::from_rows(&[vec![0.0, 0.0], vec![1000.0, 0.0]]).unwrap();
        let c = classify(&logits);
        assert_eq!(c.sample(0), &[0.5, 0.5]);
        assert_eq!(c.sample(1), &[1.0, 0.0]);
        assert!(c.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = glorot_init(40, 5, 6).unwrap().map(|v| 20.0 * v);
        let c = classify(&logits);
        for i in 0..40 {
            assert!((c.sample(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let c = Confidence::new(vec![1.0, 0.0, 0.0, 1.0], ConfidenceKind::ClassDistribution { classes: 2 }).unwrap();
        let (loss, _) = class_cross_entropy(&c, &[(0, 0), (1, 1)]).unwrap();
        assert!(loss < 1e-11);
    }

    #[test]
    fn uniform_binary_prediction_costs_ln2() {
        let c = Confidence::new(vec![0.5, 0.5], ConfidenceKind::EdgeScore).unwrap();
        let (loss, grad) = binary_cross_entropy(&c, &[1.0, 0.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.25, 0.25]);
    }

    #[test]
    fn empty_index_set_rejected() {
        let c = classify(&Matrix::zeros(2, 2));
        assert!(class_cross_entropy(&c, &[]).is_err());
    }

    #[test]
    fn class_loss_matches_scalar_loop_oracle() {
        let logits = glorot_init(12, 4, 21).unwrap().map(|v| 3.0 * v);
        let targets: Vec<(usize, usize)> = (0..12).step_by(2).map(|v| (v, v % 4)).collect();
        let (loss, _) = class_cross_entropy(&classify(&logits), &targets).unwrap();
        let mut oracle = 0.0;
        for &(v, c) in &targets {
            let row = logits.row(v);
            let z: f64 = row.iter().map(|l| l.exp()).sum();
            oracle += -(row[c].exp() / z).ln();
        }
        oracle /= targets.len() as f64;
        assert!((loss - oracle).abs() < 1e-10);
    }

    #[test]
    fn binary_loss_matches_scalar_loop_oracle() {
        let e = glorot_init(10, 3, 2).unwrap().map(|v| 2.0 * v);
        let pairs = [(0, 1), (2, 3), (4, 9), (5, 6), (7, 8)];
        let targets = [1.0, 0.0, 1.0, 1.0, 0.0];
        let (loss, _) = binary_cross_entropy(&decode_links(&e, &pairs).unwrap(), &targets).unwrap();
        let mut oracle = 0.0;
        for (&(i, j), &y) in pairs.iter().zip(&targets) {
            let s: f64 = (0..3).map(|f| e.get(i, f) * e.get(j, f)).sum();
            let p = 1.0 / (1.0 + (-s).exp());
            oracle -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        oracle /= 5.0;
        assert!((loss - oracle).abs() < 1e-10);
    }

    #[test]
    fn mean_of_two_views() {
        let a = Confidence::new(vec![0.4], ConfidenceKind::EdgeScore).unwrap();
        let b = Confidence::new(vec![0.6], ConfidenceKind::EdgeScore).unwrap();
        assert!((Confidence::mean(&[a, b]).unwrap().values()[0] - 0.5).abs() < 1e-15);
    }
}
