//! Token-level baselines: BLEU and Jaccard similarity.
//!
//! Both share one tokenizer: maximal runs of alphanumerics and `_` form a
//! token, every other non-whitespace character is a token of its own.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BleuError {
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("max_order must be at least 1")]
    InvalidOrder,
    #[error("smoothing epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("empty token")]
    EmptyToken,
}

/// A sequence of non-empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self, BleuError> {
        if tokens.iter().any(String::is_empty) {
            return Err(BleuError::EmptyToken);
        }
        Ok(TokenSequence(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(source: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in source.chars() {
        if is_word_char(c) {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    TokenSequence(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    /// Stands in for a zero n-gram precision inside the logarithm.
    pub smoothing_epsilon: f64,
    pub brevity_penalty: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            smoothing_epsilon: 1e-9,
            brevity_penalty: true,
        }
    }
}

impl BleuConfig {
    pub fn validate(&self) -> Result<(), BleuError> {
        if self.max_order == 0 {
            return Err(BleuError::InvalidOrder);
        }
        if !(self.smoothing_epsilon > 0.0 && self.smoothing_epsilon.is_finite()) {
            return Err(BleuError::InvalidEpsilon(self.smoothing_epsilon));
        }
        Ok(())
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped ("modified") n-gram precision as `(matches, total)`.
pub fn modified_precision(
    prediction: &TokenSequence,
    reference: &TokenSequence,
    n: usize,
) -> (usize, usize) {
    let pred = ngram_counts(&prediction.0, n);
    let refs = ngram_counts(&reference.0, n);
    let total = prediction.len().saturating_sub(n - 1);
    let matches = pred
        .iter()
        .map(|(gram, &count)| count.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, total)
}

/// Sentence BLEU of `prediction` against a single `reference`.
///
/// The geometric mean runs over orders `1..=min(max_order, |prediction|)`,
/// so a prediction shorter than `max_order` is not punished for having no
/// n-grams of the longer orders.
pub fn bleu(
    prediction: &TokenSequence,
    reference: &TokenSequence,
    cfg: &BleuConfig,
) -> Result<f64, BleuError> {
    cfg.validate()?;
    if reference.is_empty() {
        return Err(BleuError::EmptyReference);
    }
    if prediction.is_empty() {
        return Ok(0.0);
    }
    let orders = cfg.max_order.min(prediction.len());
    let log_sum: f64 = (1..=orders)
        .map(|n| {
            let (matches, total) = modified_precision(prediction, reference, n);
            let p = matches as f64 / total as f64;
            if p > 0.0 {
                p.ln()
            } else {
                cfg.smoothing_epsilon.ln()
            }
        })
        .sum();
    let mut score = (log_sum / orders as f64).exp();
    if cfg.brevity_penalty {
        let ratio = reference.len() as f64 / prediction.len() as f64;
        score *= (1.0 - ratio).exp().min(1.0);
    }
    Ok(score.clamp(0.0, 1.0))
}

/// Intersection over union of the two token sets. Two empty inputs are
/// identical and score 1.
pub fn jaccard(prediction: &TokenSequence, reference: &TokenSequence) -> f64 {
    let a: HashSet<&str> = prediction.0.iter().map(String::as_str).collect();
    let b: HashSet<&str> = reference.0.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("a+b").tokens(), ["a", "+", "b"]);
        assert_eq!(
            tokenize("return max(a, b)").tokens(),
            ["return", "max", "(", "a", ",", "b", ")"]
        );
        assert_eq!(tokenize("x==1").tokens(), ["x", "=", "=", "1"]);
        assert_eq!(tokenize("  snake_case2 \n\t").tokens(), ["snake_case2"]);
        assert_eq!(tokenize("naïve→x").tokens(), ["naïve", "→", "x"]);
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn empty_tokens_rejected() {
        assert_eq!(
            TokenSequence::new(vec!["a".into(), String::new()]),
            Err(BleuError::EmptyToken)
        );
    }

    #[test]
    fn clipped_unigram_precision() {
        let pred = seq(&["the"; 7]);
        let reference = seq(&["the", "cat", "is", "on", "the", "mat"]);
        assert_eq!(modified_precision(&pred, &reference, 1), (2, 7));
        let cfg = BleuConfig {
            max_order: 1,
            brevity_penalty: false,
            ..BleuConfig::default()
        };
        let score = bleu(&pred, &reference, &cfg).unwrap();
        assert!((score - 2.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn bleu_edges() {
        let cfg = BleuConfig::default();
        let s = seq(&["a", "b", "c", "d", "e"]);
        assert_eq!(bleu(&s, &s, &cfg).unwrap(), 1.0);
        let short = seq(&["a", "b"]);
        assert_eq!(bleu(&short, &short, &cfg).unwrap(), 1.0);
        assert_eq!(bleu(&seq(&[]), &s, &cfg).unwrap(), 0.0);
        assert_eq!(bleu(&s, &seq(&[]), &cfg), Err(BleuError::EmptyReference));
        let disjoint = bleu(
            &seq(&["x", "y", "z", "w"]),
            &seq(&["a", "b", "c", "d"]),
            &cfg,
        )
        .unwrap();
        assert!(disjoint <= cfg.smoothing_epsilon * (1.0 + 1e-9));
        let bad = BleuConfig {
            max_order: 0,
            ..cfg
        };
        assert_eq!(bleu(&s, &s, &bad), Err(BleuError::InvalidOrder));
    }

    #[test]
    fn brevity_penalty() {
        let reference = seq(&["a", "b", "c", "d"]);
        let pred = seq(&["a", "b"]);
        let cfg = BleuConfig {
            max_order: 1,
            ..BleuConfig::default()
        };
        // precision 1, BP = exp(1 - 4/2)
        let score = bleu(&pred, &reference, &cfg).unwrap();
        assert!((score - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn order_sensitivity() {
        let a = seq(&["a", "b", "c", "d"]);
        let b = seq(&["d", "c", "b", "a"]);
        assert_eq!(jaccard(&a, &b), 1.0);
        assert!(bleu(&a, &b, &BleuConfig::default()).unwrap() < 1.0);
    }

    #[test]
    fn jaccard_cases() {
        assert!((jaccard(&seq(&["a", "b"]), &seq(&["b", "c"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&seq(&["a", "b"]), &seq(&["b", "a", "a"])), 1.0);
        assert_eq!(jaccard(&seq(&["a"]), &seq(&["b"])), 0.0);
        assert_eq!(jaccard(&seq(&[]), &seq(&[])), 1.0);
        assert_eq!(jaccard(&seq(&[]), &seq(&["a"])), 0.0);
    }
}
