//! Binary classification evaluation: confusion matrix, the four derived
//! rates, and AUROC. Class 1 is the positive class throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact outcome counts over an evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// The five headline numbers reported for a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: f64,
}

impl MetricsReport {
    /// Builds the full report from hard predictions, class-1 scores, and
    /// ground truth.
    pub fn compute(predicted: &[u8], scores: &[f64], actual: &[u8]) -> Result<MetricsReport> {
        let cm = confusion_matrix(predicted, actual)?;
        let (accuracy, precision, recall, f1) = classification_metrics(&cm)?;
        Ok(MetricsReport {
            accuracy,
            precision,
            recall,
            f1,
            auroc: auroc(scores, actual)?,
        })
    }
}

fn check_binary(labels: &[u8]) -> Result<()> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Counts prediction outcomes with class 1 as positive.
pub fn confusion_matrix(predicted: &[u8], actual: &[u8]) -> Result<ConfusionMatrix> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("no predictions to evaluate".into()));
    }
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    check_binary(predicted)?;
    check_binary(actual)?;
    let mut cm = ConfusionMatrix {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (1, 1) => cm.true_positives += 1,
            (1, 0) => cm.false_positives += 1,
            (0, 0) => cm.true_negatives += 1,
            _ => cm.false_negatives += 1,
        }
    }
    Ok(cm)
}

/// (accuracy, precision, recall, f1). Zero denominators yield 0 so a
/// report always renders.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<(f64, f64, f64, f64)> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("empty confusion matrix".into()));
    }
    let tp = cm.true_positives as f64;
    let accuracy = (tp + cm.true_negatives as f64) / total as f64;
    let rate = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    let precision = rate(tp, tp + cm.false_positives as f64);
    let recall = rate(tp, tp + cm.false_negatives as f64);
    let f1 = rate(2.0 * precision * recall, precision + recall);
    Ok((accuracy, precision, recall, f1))
}

/// Probability that a uniformly random positive outscores a uniformly
/// random negative, ties counted as half. Computed from average ranks
/// (the Mann-Whitney statistic), which handles ties exactly.
pub fn auroc(scores: &[f64], actual: &[u8]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores to rank".into()));
    }
    if scores.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: scores.len(),
        });
    }
    check_binary(actual)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig("scores must be finite".into()));
    }
    let n_pos = actual.iter().filter(|&&a| a == 1).count();
    let n_neg = actual.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average 1-based rank within each tied group, summed over positives.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if actual[idx] == 1 {
                positive_rank_sum += avg_rank;
            }
        }
        i = j;
    }
    let u = positive_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}
