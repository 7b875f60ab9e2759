//! Pearson correlation and execution-match thresholding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Column, HarnessError, MetricVector};

/// Threshold grid spacing; matches two-decimal thresholds.
pub const DEFAULT_THRESHOLD_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("input is constant")]
    ConstantInput,
    #[error("not enough complete rows for {0} / {1}")]
    InsufficientData(String, String),
    #[error("labels must contain both classes")]
    DegenerateLabels,
    #[error("threshold step must be in (0, 0.5], got {0}")]
    InvalidStep(f64),
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooShort(n));
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations. `r[i][j]` is `None` when either column is
/// constant over the rows where both are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metric_names: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.metric_names.iter().position(|n| n == a)?;
        let j = self.metric_names.iter().position(|n| n == b)?;
        self.r[i][j]
    }
}

/// Rows where both columns are present.
pub fn paired_column(vectors: &[MetricVector], a: Column, b: Column) -> (Vec<f64>, Vec<f64>) {
    vectors
        .iter()
        .filter_map(|v| Some((v.column(a)?, v.column(b)?)))
        .unzip()
}

/// Correlation matrix over `columns`, dropping incomplete rows per pair.
pub fn correlation_matrix(
    vectors: &[MetricVector],
    columns: &[Column],
) -> Result<CorrelationMatrix, HarnessError> {
    let k = columns.len();
    let mut r = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys) = paired_column(vectors, columns[i], columns[j]);
            let value = match pearson(&xs, &ys) {
                Ok(v) => Some(v),
                Err(StatsError::ConstantInput) => None,
                Err(StatsError::TooShort(_)) => {
                    return Err(StatsError::InsufficientData(
                        columns[i].name().to_owned(),
                        columns[j].name().to_owned(),
                    )
                    .into())
                }
                Err(e) => return Err(e.into()),
            };
            r[i][j] = value;
            r[j][i] = value;
        }
    }
    Ok(CorrelationMatrix {
        metric_names: columns.iter().map(|c| c.name().to_owned()).collect(),
        r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub positives_predicted: usize,
}

/// Predicts a match wherever `score > threshold` and scores the predictions.
pub fn apply_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> ThresholdResult {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&score, &label) in scores.iter().zip(labels) {
        match (score > threshold, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ThresholdResult {
        threshold,
        f1,
        accuracy: (tp + tn) as f64 / scores.len().max(1) as f64,
        precision,
        recall,
        positives_predicted: tp + fp,
    }
}

/// Thresholds `0, step, 2*step, ...` up to and including 1.
pub fn threshold_grid(step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut k = 0u32;
    loop {
        // Rounded so 0.07 is 0.07 and not 0.07000000000000001.
        let t = (f64::from(k) * step * 1e9).round() / 1e9;
        if t >= 1.0 {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(1.0);
    grid
}

/// Enumerates thresholds and keeps the best F1; ties go to higher accuracy,
/// then to the lower threshold.
pub fn optimize_threshold(
    scores: &[f64],
    labels: &[bool],
    step: f64,
) -> Result<ThresholdResult, StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch(scores.len(), labels.len()));
    }
    if !(step > 0.0 && step <= 0.5) {
        return Err(StatsError::InvalidStep(step));
    }
    if !labels.contains(&true) || !labels.contains(&false) {
        return Err(StatsError::DegenerateLabels);
    }
    let mut best: Option<ThresholdResult> = None;
    for t in threshold_grid(step) {
        let candidate = apply_threshold(scores, labels, t);
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.f1 > b.f1 || (candidate.f1 == b.f1 && candidate.accuracy > b.accuracy)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("grid is never empty"))
}
