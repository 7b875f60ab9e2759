//! Ordered tree edit distance under weighted delete / insert / rename.
//!
//! [`edit_distance`] is a keyroot dynamic program over one path
//! decomposition per pair: either every subtree is decomposed along its
//! leftmost path (classic Zhang–Shasha) or along its rightmost path (the same
//! program run on both trees mirrored). The cheaper of the two is picked from
//! the exact subproblem counts before any work is done, which matters for
//! right-heavy trees such as long statement lists.
//!
//! [`brute_force_distance`] enumerates every edit mapping of two small trees
//! and shares no code with the dynamic program; it exists to check it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::SyntaxTree;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TedError {
    #[error("{name} weight must be a finite non-negative number, got {value}")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("brute force is limited to {limit} nodes per tree, got {left} and {right}")]
    TooLarge {
        limit: usize,
        left: usize,
        right: usize,
    },
}

/// Per-operation penalty weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCosts")]
pub struct CostConfig {
    delete_weight: f64,
    insert_weight: f64,
    rename_weight: f64,
}

#[derive(Deserialize)]
struct RawCosts {
    delete_weight: f64,
    insert_weight: f64,
    rename_weight: f64,
}

impl TryFrom<RawCosts> for CostConfig {
    type Error = TedError;

    fn try_from(raw: RawCosts) -> Result<Self, TedError> {
        CostConfig::new(raw.delete_weight, raw.insert_weight, raw.rename_weight)
    }
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig::UNIT
    }
}

impl CostConfig {
    pub const UNIT: CostConfig = CostConfig {
        delete_weight: 1.0,
        insert_weight: 1.0,
        rename_weight: 1.0,
    };

    pub fn new(delete: f64, insert: f64, rename: f64) -> Result<Self, TedError> {
        Ok(CostConfig {
            delete_weight: check("delete", delete)?,
            insert_weight: check("insert", insert)?,
            rename_weight: check("rename", rename)?,
        })
    }

    pub fn delete_weight(&self) -> f64 {
        self.delete_weight
    }

    pub fn insert_weight(&self) -> f64 {
        self.insert_weight
    }

    pub fn rename_weight(&self) -> f64 {
        self.rename_weight
    }

    pub fn with_weight(self, op: EditOp, value: f64) -> Result<Self, TedError> {
        let mut out = self;
        match op {
            EditOp::Delete => out.delete_weight = check("delete", value)?,
            EditOp::Insert => out.insert_weight = check("insert", value)?,
            EditOp::Rename => out.rename_weight = check("rename", value)?,
        }
        Ok(out)
    }

    pub fn weight(&self, op: EditOp) -> f64 {
        match op {
            EditOp::Delete => self.delete_weight,
            EditOp::Insert => self.insert_weight,
            EditOp::Rename => self.rename_weight,
        }
    }
}

fn check(name: &'static str, value: f64) -> Result<f64, TedError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(TedError::InvalidWeight { name, value })
    }
}

/// The three edit operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Delete,
    Insert,
    Rename,
}

impl std::str::FromStr for EditOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "delete" => Ok(EditOp::Delete),
            "insert" => Ok(EditOp::Insert),
            "rename" => Ok(EditOp::Rename),
            other => Err(format!("unknown edit operation '{other}'")),
        }
    }
}

/// Which path every subtree was decomposed along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathStrategy {
    Left,
    Right,
    /// Brute-force enumeration, no decomposition.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TedStats {
    pub strategy: PathStrategy,
    /// Relevant subproblems (forest-distance cells) evaluated, or mappings
    /// enumerated for the exhaustive oracle.
    pub subproblems: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EditDistanceResult {
    pub delta: f64,
    pub stats: TedStats,
}

/// Postorder view of a tree as the dynamic program consumes it.
struct Postorder {
    labels: Vec<u32>,
    /// Leftmost leaf descendant of each node, in postorder numbering.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl Postorder {
    fn new(tree: &SyntaxTree, interner: &mut HashMap<String, u32>, mirrored: bool) -> Self {
        let n = tree.node_count();
        let sizes = tree.subtree_sizes();
        let ids: Vec<u32> = tree
            .labels()
            .iter()
            .map(|label| {
                let next = interner.len() as u32;
                *interner.entry(label.clone()).or_insert(next)
            })
            .collect();

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (p, kids) in children.iter_mut().enumerate() {
            let mut c = p + 1;
            while c < p + sizes[p] {
                kids.push(c);
                c += sizes[c];
            }
            if mirrored {
                kids.reverse();
            }
        }

        let mut labels = Vec::with_capacity(n);
        let mut leftmost = Vec::with_capacity(n);
        // Postorder index of the first leaf seen under each open node.
        let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(0, 0, None)];
        while let Some((node, next, first_leaf)) = stack.last_mut() {
            if let Some(&child) = children[*node].get(*next) {
                *next += 1;
                stack.push((child, 0, None));
                continue;
            }
            let post = labels.len();
            let lml = first_leaf.unwrap_or(post);
            labels.push(ids[*node]);
            leftmost.push(lml);
            stack.pop();
            if let Some((_, _, parent_first)) = stack.last_mut() {
                parent_first.get_or_insert(lml);
            }
        }

        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Postorder {
            labels,
            leftmost,
            keyroots,
        }
    }

    fn keyroot_weight(&self) -> u64 {
        self.keyroots
            .iter()
            .map(|&k| (k - self.leftmost[k] + 1) as u64)
            .sum()
    }
}

/// Minimum total cost of an edit script turning `source` into `target`.
///
/// Renaming a node to an identical label is free; every other rename costs
/// `rename_weight`. Deleting a node from `source` costs `delete_weight`,
/// inserting one from `target` costs `insert_weight`.
pub fn edit_distance(
    source: &SyntaxTree,
    target: &SyntaxTree,
    costs: &CostConfig,
) -> EditDistanceResult {
    let mut interner = HashMap::new();
    let left = (
        Postorder::new(source, &mut interner, false),
        Postorder::new(target, &mut interner, false),
    );
    let right = (
        Postorder::new(source, &mut interner, true),
        Postorder::new(target, &mut interner, true),
    );
    let left_cost = left.0.keyroot_weight() * left.1.keyroot_weight();
    let right_cost = right.0.keyroot_weight() * right.1.keyroot_weight();
    let (strategy, (a, b), subproblems) = if right_cost < left_cost {
        (PathStrategy::Right, right, right_cost)
    } else {
        (PathStrategy::Left, left, left_cost)
    };
    EditDistanceResult {
        delta: keyroot_dp(&a, &b, costs),
        stats: TedStats {
            strategy,
            subproblems,
        },
    }
}

#[inline(always)]
fn min(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

fn keyroot_dp(a: &Postorder, b: &Postorder, costs: &CostConfig) -> f64 {
    let (del, ins, ren) = (
        costs.delete_weight,
        costs.insert_weight,
        costs.rename_weight,
    );
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut tree_dist = vec![0.0f64; n * m];
    let mut forest = vec![0.0f64; (n + 1) * (m + 1)];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.leftmost[i], b.leftmost[j]);
            let rows = i - li + 2;
            let cols = j - lj + 2;
            let b_leftmost = &b.leftmost[lj..=j];
            let b_labels = &b.labels[lj..=j];
            // Row x, column y: distance between the forests a[li..li+x)
            // and b[lj..lj+y).
            let forest = &mut forest[..rows * cols];
            forest[0] = 0.0;
            for y in 1..cols {
                forest[y] = forest[y - 1] + ins;
            }
            for x in 1..rows {
                let node_a = li + x - 1;
                let lml_a = a.leftmost[node_a];
                let (done, rest) = forest.split_at_mut(x * cols);
                let prev = &done[(x - 1) * cols..];
                let cur = &mut rest[..cols];
                let td = &mut tree_dist[node_a * m + lj..node_a * m + j + 1];
                let mut left = prev[0] + del;
                cur[0] = left;
                if lml_a == li {
                    let label_a = a.labels[node_a];
                    for y in 1..cols {
                        let best = if b_leftmost[y - 1] == lj {
                            let relabel = if label_a == b_labels[y - 1] { 0.0 } else { ren };
                            let best = min(min(prev[y] + del, prev[y - 1] + relabel), left + ins);
                            td[y - 1] = best;
                            best
                        } else {
                            let sub = &done[(lml_a - li) * cols..];
                            min(
                                min(prev[y] + del, sub[b_leftmost[y - 1] - lj] + td[y - 1]),
                                left + ins,
                            )
                        };
                        cur[y] = best;
                        left = best;
                    }
                } else {
                    let sub = &done[(lml_a - li) * cols..];
                    for y in 1..cols {
                        let best = min(
                            min(prev[y] + del, sub[b_leftmost[y - 1] - lj] + td[y - 1]),
                            left + ins,
                        );
                        cur[y] = best;
                        left = best;
                    }
                }
            }
        }
    }
    tree_dist[(n - 1) * m + (m - 1)]
}

/// Node bound for [`brute_force_distance`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Exact edit distance by enumerating every edit mapping.
///
/// A mapping is a one-to-one partial matching between nodes that preserves
/// ancestry and sibling order. Unmatched source nodes are deletions,
/// unmatched target nodes are insertions and matched pairs with different
/// labels are renames; the distance is the cheapest mapping.
pub fn brute_force_distance(
    source: &SyntaxTree,
    target: &SyntaxTree,
    costs: &CostConfig,
) -> Result<EditDistanceResult, TedError> {
    let (n, m) = (source.node_count(), target.node_count());
    if n > BRUTE_FORCE_LIMIT || m > BRUTE_FORCE_LIMIT {
        return Err(TedError::TooLarge {
            limit: BRUTE_FORCE_LIMIT,
            left: n,
            right: m,
        });
    }
    let search = MappingSearch {
        source,
        target,
        source_anc: ancestry(source),
        target_anc: ancestry(target),
        costs: *costs,
    };
    let mut state = SearchState {
        pairs: Vec::with_capacity(n),
        used: vec![false; m],
        renames: 0,
        best: f64::INFINITY,
        visited: 0,
    };
    search.assign(0, &mut state);
    Ok(EditDistanceResult {
        delta: state.best,
        stats: TedStats {
            strategy: PathStrategy::Exhaustive,
            subproblems: state.visited,
        },
    })
}

/// `anc[a][b]` is true when preorder node `a` is a proper ancestor of `b`.
fn ancestry(tree: &SyntaxTree) -> Vec<Vec<bool>> {
    let n = tree.node_count();
    let sizes = tree.subtree_sizes();
    (0..n)
        .map(|a| (0..n).map(|b| b > a && b < a + sizes[a]).collect())
        .collect()
}

struct MappingSearch<'a> {
    source: &'a SyntaxTree,
    target: &'a SyntaxTree,
    source_anc: Vec<Vec<bool>>,
    target_anc: Vec<Vec<bool>>,
    costs: CostConfig,
}

struct SearchState {
    pairs: Vec<(usize, usize)>,
    used: Vec<bool>,
    renames: usize,
    best: f64,
    visited: u64,
}

impl MappingSearch<'_> {
    fn assign(&self, node: usize, state: &mut SearchState) {
        let (n, m) = (self.source.node_count(), self.target.node_count());
        if node == n {
            state.visited += 1;
            let matched = state.pairs.len();
            let cost = self.costs.delete_weight * (n - matched) as f64
                + self.costs.insert_weight * (m - matched) as f64
                + self.costs.rename_weight * state.renames as f64;
            state.best = state.best.min(cost);
            return;
        }
        // Leave `node` unmatched.
        self.assign(node + 1, state);
        for partner in 0..m {
            if state.used[partner] || !self.consistent(node, partner, &state.pairs) {
                continue;
            }
            let renamed = self.source.labels()[node] != self.target.labels()[partner];
            state.used[partner] = true;
            state.pairs.push((node, partner));
            state.renames += renamed as usize;
            self.assign(node + 1, state);
            state.renames -= renamed as usize;
            state.pairs.pop();
            state.used[partner] = false;
        }
    }

    /// Earlier pairs all have a smaller source preorder index than `node`, so
    /// each is either an ancestor of `node` or lies to its left. The partner
    /// must stand in the same relation to `partner`.
    fn consistent(&self, node: usize, partner: usize, pairs: &[(usize, usize)]) -> bool {
        pairs
            .iter()
            .all(|&(a, b)| b < partner && self.source_anc[a][node] == self.target_anc[b][partner])
    }
}
