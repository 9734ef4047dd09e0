use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("length mismatch: {preds} predictions vs {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("labels must contain both classes")]
    DegenerateLabels,
}

fn check_lengths(preds: usize, labels: usize) -> Result<(), MetricError> {
    if preds != labels || preds == 0 {
        return Err(MetricError::LengthMismatch { preds, labels });
    }
    Ok(())
}

/// Mean squared error over raw predictions.
pub fn squared_loss(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), labels.len())?;
    let mut acc = 0.0;
    for (&p, &r) in preds.iter().zip(labels) {
        let d = r - p;
        acc += d * d;
    }
    Ok(acc / preds.len() as f64)
}

/// Fraction of labels matched by thresholding raw predictions;
/// `pred >= threshold` counts as class 1.
pub fn accuracy(preds: &[f64], labels: &[u8], threshold: f64) -> Result<f64, MetricError> {
    check_lengths(preds.len(), labels.len())?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &r)| u8::from(p >= threshold) == r)
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Root mean squared error with predictions clamped to [0, 1] first, so
/// unbounded scores stay comparable to probabilistic predictors.
pub fn rmse(preds: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), labels.len())?;
    let mut acc = 0.0;
    for (&p, &r) in preds.iter().zip(labels) {
        let d = r as f64 - p.clamp(0.0, 1.0);
        acc += d * d;
    }
    Ok((acc / preds.len() as f64).sqrt())
}

/// RMSE on raw, unclamped predictions.
pub fn rmse_raw(preds: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), labels.len())?;
    let mut acc = 0.0;
    for (&p, &r) in preds.iter().zip(labels) {
        let d = r as f64 - p;
        acc += d * d;
    }
    Ok((acc / preds.len() as f64).sqrt())
}

/// Area under the ROC curve via the tie-aware Mann-Whitney rank
/// statistic: P(pred+ > pred-) + P(pred+ = pred-)/2, in O(n log n).
pub fn auc(preds: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&r| r == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_unstable_by(|&a, &b| preds[a].total_cmp(&preds[b]));

    // average 1-based ranks within tie groups, summed over positives
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && preds[order[j + 1]] == preds[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let n_pos = n_pos as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Accuracy/RMSE/AUC triple for one evaluation run, with provenance.
/// Reals are rounded to 6 decimals so serialized reports diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub rmse: f64,
    pub auc: f64,
    pub n_test: usize,
    pub config: String,
    pub seed: u64,
    pub dataset_hash: String,
}

impl MetricsReport {
    pub fn new(
        accuracy: f64,
        rmse: f64,
        auc: f64,
        n_test: usize,
        config_fingerprint: String,
        seed: u64,
        dataset_hash: String,
    ) -> MetricsReport {
        MetricsReport {
            accuracy: round6(accuracy),
            rmse: round6(rmse),
            auc: round6(auc),
            n_test,
            config: config_fingerprint,
            seed,
            dataset_hash,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
