use crate::error::{Error, Result};

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("metric scores".into()));
    }
    Ok(())
}

/// Indices sorted by descending score; ties keep input order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// ROC AUC via the Mann–Whitney rank statistic; tied scores share their
/// average rank, so a tied positive/negative pair counts one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_binary(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("AUC needs both positive and negative samples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision `Σ (R_t − R_{t−1})·P_t` over distinct score thresholds
/// in descending order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_binary(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(Error::InvalidArgument("average precision needs a positive sample".into()));
    }
    let order = descending(scores);
    let mut ap = 0.0;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        tp += order[i..=j].iter().filter(|&&k| labels[k]).count();
        seen += j - i + 1;
        let recall = tp as f64 / total_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Accuracy and 0-1 error of `pred` against `truth` over `index_set`.
pub fn accuracy_and_error(pred: &[usize], truth: &[usize], index_set: &[usize]) -> Result<(f64, f64)> {
    if index_set.is_empty() {
        return Err(Error::InvalidArgument("accuracy over an empty index set".into()));
    }
    let mut wrong = 0usize;
    for &i in index_set {
        if i >= pred.len() || i >= truth.len() {
            return Err(Error::OutOfRange {
                what: "predictions",
                index: i,
                len: pred.len().min(truth.len()),
            });
        }
        if pred[i] != truth[i] {
            wrong += 1;
        }
    }
    let n = index_set.len();
    let err = wrong as f64 / n as f64;
    Ok((1.0 - err, err))
}
