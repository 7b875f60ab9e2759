//! Tree Similarity of Edit Distance (TSED) for source code.
//!
//! Code is parsed into a concrete syntax tree, the trees are compared with a
//! weighted ordered tree edit distance, and the distance is normalized by the
//! larger tree:
//!
//! ```
//! use tsed::{tsed, CostConfig, Frontend, LanguageId};
//!
//! let python = LanguageId::new("python").unwrap();
//! let score = tsed(&Frontend::default(), "x = 1", "x = 2", &python, &CostConfig::UNIT).unwrap();
//! assert_eq!(score.value, 1.0);
//! ```
//!
//! Token-level baselines live in [`baseline`], model-based scoring in
//! [`llm`], and batch evaluation with correlation and threshold analysis in
//! [`harness`].

pub mod baseline;
pub mod harness;
pub mod llm;
pub mod metric;
pub mod parser;
pub mod ted;
pub mod tree;

pub use baseline::{bleu, jaccard, tokenize, BleuConfig, TokenSequence};
pub use metric::{tsed, tsed_from_trees, TsedScore};
pub use parser::{Frontend, LabelPolicy, LanguageId, ParseError};
pub use ted::{edit_distance, CostConfig, EditOp};
pub use tree::{SyntaxTree, TreeNode};
