use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, Sample};
use crate::metric::tsed_from_trees;
use crate::parser::Frontend;
use crate::ted::{CostConfig, EditOp};
use crate::tree::SyntaxTree;

/// Correlation between TSED and the target at one weight. `correlation` is
/// `None` (with `error` set) when it is undefined, e.g. constant scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub weight: f64,
    pub correlation: Option<f64>,
    pub error: Option<String>,
}

/// Varies one edit weight over `grid`, the other two held at 1.0, and
/// correlates the resulting TSED scores with `target` (aligned with
/// `samples`; `None` entries are skipped).
///
/// Each sample is parsed once; only the edit distance is recomputed per
/// grid point.
pub fn weight_sweep(
    samples: &[Sample],
    frontend: &Frontend,
    vary: EditOp,
    grid: &[f64],
    target: &[Option<f64>],
) -> Result<Vec<SweepPoint>, HarnessError> {
    if target.len() != samples.len() {
        return Err(super::StatsError::LengthMismatch(samples.len(), target.len()).into());
    }
    let costs_per_point = grid
        .iter()
        .map(|&w| {
            CostConfig::UNIT
                .with_weight(vary, w)
                .map_err(|_| HarnessError::InvalidGrid(w))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let trees: Vec<(SyntaxTree, SyntaxTree)> = samples
        .par_iter()
        .map(|s| frontend.parse_pair(&s.prediction, &s.reference, &s.language))
        .collect::<Result<_, _>>()?;

    let points = grid
        .par_iter()
        .zip(&costs_per_point)
        .map(|(&weight, costs)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = trees
                .iter()
                .zip(target)
                .filter_map(|((pred, reference), t)| {
                    Some((tsed_from_trees(pred, reference, costs).value, (*t)?))
                })
                .unzip();
            match super::pearson(&xs, &ys) {
                Ok(r) => SweepPoint {
                    weight,
                    correlation: Some(r),
                    error: None,
                },
                Err(e) => SweepPoint {
                    weight,
                    correlation: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(points)
}

/// `start, start+step, ..., end` with the endpoints included.
pub fn linear_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "grid step must be positive");
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect()
}
