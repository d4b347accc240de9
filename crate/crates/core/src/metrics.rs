//! Classification metrics. Class 1 ("true") is the positive class for the
//! headline precision / recall / F1 and for AUC; per-class views of both
//! classes are always reported alongside.

use ndarray::Array2;

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the evaluated nodes contain only one class.
    pub auc: Option<f64>,
    /// Indexed by class: `[fake, true]`.
    pub per_class: [ClassMetrics; 2],
    /// `confusion[actual][predicted]`.
    pub confusion: [[usize; 2]; 2],
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn harmonic_mean(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn class_metrics(confusion: &[[usize; 2]; 2], positive: usize) -> ClassMetrics {
    let negative = 1 - positive;
    let tp = confusion[positive][positive];
    let fp = confusion[negative][positive];
    let fn_ = confusion[positive][negative];
    let tn = confusion[negative][negative];
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics {
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
    }
}

/// Predicted class from a probability row; exact ties go to class 1.
pub fn predict_class(p_fake: f64, p_true: f64) -> Label {
    if p_true >= p_fake {
        Label::True
    } else {
        Label::Fake
    }
}

/// Metrics over the masked rows of an `n × 2` probability matrix.
pub fn evaluate(probs: &Array2<f64>, labels: &[Label], mask: &[bool]) -> Result<Metrics> {
    if probs.ncols() != 2 || probs.nrows() != labels.len() || mask.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "probabilities {:?}, {} labels, {} mask entries",
            probs.dim(),
            labels.len(),
            mask.len()
        )));
    }
    let mut confusion = [[0usize; 2]; 2];
    let mut scores = Vec::new();
    let mut truth = Vec::new();
    for (i, (&y, _)) in labels.iter().zip(mask).enumerate().filter(|(_, (_, &m))| m) {
        let pred = predict_class(probs[[i, 0]], probs[[i, 1]]);
        confusion[y.index()][pred.index()] += 1;
        scores.push(probs[[i, 1]]);
        truth.push(y);
    }
    if truth.is_empty() {
        return Err(Error::Invalid("evaluation mask selects no nodes".into()));
    }
    let per_class = [class_metrics(&confusion, 0), class_metrics(&confusion, 1)];
    let headline = per_class[1];
    Ok(Metrics {
        accuracy: ratio(confusion[0][0] + confusion[1][1], truth.len()),
        precision: headline.precision,
        recall: headline.recall,
        f1: headline.f1,
        auc: roc_auc(&scores, &truth).ok(),
        per_class,
        confusion,
    })
}

/// ROC AUC via the rank-sum (Mann-Whitney U) statistic with tie-averaged
/// ranks. O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|&&l| l == Label::True).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Invalid("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        let tied_positives = order[start..end].iter().filter(|&&i| labels[i] == Label::True).count();
        positive_rank_sum += mean_rank * tied_positives as f64;
        start = end;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Exact pair counting: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. O(P·N); used as an independent check.
pub fn auc_pairwise_oracle(scores: &[f64], labels: &[Label]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::True)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Fake)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Invalid("AUC needs both classes".into()));
    }
    let mut twice_correct: u64 = 0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                twice_correct += 2;
            } else if p == n {
                twice_correct += 1;
            }
        }
    }
    Ok(twice_correct as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}
