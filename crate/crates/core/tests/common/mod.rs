#![allow(dead_code)]

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use rand::Rng;
use tsed::harness::{load_dataset, Sample};
use tsed::{LanguageId, SyntaxTree, TreeNode};

pub const ALPHABET: [&str; 3] = ["a", "b", "c"];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Builds a tree from `(parent_pick, label)` pairs: node `k + 1` hangs off
/// node `parent_pick % (k + 1)` as its last child.
pub fn tree_from_plan(root_label: usize, plan: &[(usize, usize)]) -> SyntaxTree {
    let n = plan.len() + 1;
    let mut labels = vec![root_label % ALPHABET.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &(pick, label)) in plan.iter().enumerate() {
        children[pick % (k + 1)].push(k + 1);
        labels.push(label % ALPHABET.len());
    }
    fn build(i: usize, labels: &[usize], children: &[Vec<usize>]) -> TreeNode {
        TreeNode::new(
            ALPHABET[labels[i]],
            children[i]
                .iter()
                .map(|&c| build(c, labels, children))
                .collect(),
        )
    }
    SyntaxTree::from_node(&build(0, &labels, &children)).unwrap()
}

pub fn random_tree(rng: &mut impl Rng, max_nodes: usize) -> SyntaxTree {
    let n = rng.gen_range(1..=max_nodes);
    let plan: Vec<(usize, usize)> = (1..n)
        .map(|_| (rng.gen_range(0..usize::MAX), rng.gen_range(0..3)))
        .collect();
    tree_from_plan(rng.gen_range(0..3), &plan)
}

pub fn arb_tree(max_nodes: usize) -> impl Strategy<Value = SyntaxTree> {
    (
        0..3usize,
        prop::collection::vec((any::<usize>(), 0..3usize), 0..max_nodes),
    )
        .prop_map(|(root, plan)| tree_from_plan(root, &plan))
}

/// The two code files bundled for each language, read in name order.
pub fn language_fixtures() -> Vec<(LanguageId, Vec<(String, String)>)> {
    let mut out = Vec::new();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(fixture_dir().join("languages"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    for dir in dirs {
        let lang = LanguageId::new(dir.file_name().unwrap().to_str().unwrap()).unwrap();
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let sources = files
            .iter()
            .map(|f| {
                (
                    f.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read_to_string(f).unwrap(),
                )
            })
            .collect();
        out.push((lang, sources));
    }
    out
}

/// One sample per language pairing its two bundled files.
pub fn language_pair_samples() -> Vec<Sample> {
    language_fixtures()
        .into_iter()
        .map(|(lang, files)| Sample {
            id: format!("{lang}-pair"),
            language: lang,
            prediction: files[0].1.clone(),
            reference: files[1].1.clone(),
            execution_match: None,
        })
        .collect()
}

pub fn dataset() -> Vec<Sample> {
    load_dataset(&fixture_dir().join("dataset.jsonl")).unwrap()
}
