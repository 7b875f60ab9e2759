//! Tree similarity of edit distance (TSED).
//!
//! ```text
//! TSED = max(1 - delta / max(|G1|, |G2|), 0)
//! ```
//!
//! where `delta` is the weighted tree edit distance between the prediction's
//! tree `G1` and the reference's tree `G2`. The clamp keeps the score at zero
//! when expensive weights push `delta` past the node count.

use serde::Serialize;

use crate::parser::{Frontend, LanguageId, ParseError};
use crate::ted::{edit_distance, CostConfig};
use crate::tree::SyntaxTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsedScore {
    pub value: f64,
    pub delta: f64,
    pub max_nodes: usize,
    pub pred_parse_errors: bool,
    pub ref_parse_errors: bool,
}

impl TsedScore {
    pub fn had_parse_errors(&self) -> bool {
        self.pred_parse_errors || self.ref_parse_errors
    }
}

/// Normalizes an edit distance by the larger node count, clamped at zero.
pub fn normalize(delta: f64, max_nodes: usize) -> f64 {
    (1.0 - delta / max_nodes as f64).max(0.0)
}

pub fn tsed_from_trees(
    prediction: &SyntaxTree,
    reference: &SyntaxTree,
    costs: &CostConfig,
) -> TsedScore {
    let delta = edit_distance(prediction, reference, costs).delta;
    let max_nodes = prediction.node_count().max(reference.node_count());
    TsedScore {
        value: normalize(delta, max_nodes),
        delta,
        max_nodes,
        pred_parse_errors: prediction.had_parse_errors(),
        ref_parse_errors: reference.had_parse_errors(),
    }
}

/// Parses both sides with `frontend` and scores them.
pub fn tsed(
    frontend: &Frontend,
    prediction: &str,
    reference: &str,
    lang: &LanguageId,
    costs: &CostConfig,
) -> Result<TsedScore, ParseError> {
    let (pred, reference) = frontend.parse_pair(prediction, reference, lang)?;
    Ok(tsed_from_trees(&pred, &reference, costs))
}
