mod common;

use common::arb_tree;
use proptest::prelude::*;
use tsed::ted::brute_force_distance;
use tsed::{edit_distance, CostConfig, SyntaxTree, TreeNode};

const WEIGHTS: [f64; 3] = [0.5, 0.8, 1.0];

fn weights() -> impl Strategy<Value = CostConfig> {
    (0..3usize, 0..3usize, 0..3usize)
        .prop_map(|(d, i, r)| CostConfig::new(WEIGHTS[d], WEIGHTS[i], WEIGHTS[r]).unwrap())
}

fn dist(a: &SyntaxTree, b: &SyntaxTree, costs: &CostConfig) -> f64 {
    edit_distance(a, b, costs).delta
}

fn mirror(t: &SyntaxTree) -> SyntaxTree {
    fn flip(node: &TreeNode) -> TreeNode {
        TreeNode::new(
            node.label.clone(),
            node.children.iter().rev().map(flip).collect(),
        )
    }
    SyntaxTree::from_node(&flip(&t.to_node())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_brute_force(a in arb_tree(6), b in arb_tree(6), costs in weights()) {
        let fast = dist(&a, &b, &costs);
        let slow = brute_force_distance(&a, &b, &costs).unwrap().delta;
        prop_assert!((fast - slow).abs() <= 1e-9, "{a} vs {b}: {fast} != {slow}");
    }

    #[test]
    fn identity(a in arb_tree(12), costs in weights()) {
        prop_assert_eq!(dist(&a, &a, &costs), 0.0);
    }

    #[test]
    fn symmetric_under_symmetric_costs(a in arb_tree(10), b in arb_tree(10), w in 0..3usize, r in 0..3usize) {
        let costs = CostConfig::new(WEIGHTS[w], WEIGHTS[w], WEIGHTS[r]).unwrap();
        prop_assert!((dist(&a, &b, &costs) - dist(&b, &a, &costs)).abs() <= 1e-9);
    }

    #[test]
    fn swapping_sides_swaps_delete_and_insert(a in arb_tree(10), b in arb_tree(10), costs in weights()) {
        let swapped = CostConfig::new(costs.insert_weight(), costs.delete_weight(), costs.rename_weight()).unwrap();
        prop_assert!((dist(&a, &b, &costs) - dist(&b, &a, &swapped)).abs() <= 1e-9);
    }

    #[test]
    fn triangle_inequality(a in arb_tree(10), b in arb_tree(10), c in arb_tree(10)) {
        let unit = CostConfig::UNIT;
        prop_assert!(dist(&a, &c, &unit) <= dist(&a, &b, &unit) + dist(&b, &c, &unit));
    }

    #[test]
    fn size_bounds(a in arb_tree(12), b in arb_tree(12), costs in weights()) {
        let (n, m) = (a.node_count() as f64, b.node_count() as f64);
        let d = dist(&a, &b, &costs);
        prop_assert!(d <= costs.delete_weight() * n + costs.insert_weight() * m + 1e-9);
        prop_assert!(dist(&a, &b, &CostConfig::UNIT) >= (n - m).abs());
    }

    #[test]
    fn scaling(a in arb_tree(10), b in arb_tree(10), costs in weights(), k in 0.01f64..50.0) {
        let d = dist(&a, &b, &costs);
        let doubled = CostConfig::new(costs.delete_weight() * 2.0, costs.insert_weight() * 2.0, costs.rename_weight() * 2.0).unwrap();
        prop_assert_eq!(dist(&a, &b, &doubled), 2.0 * d);
        let scaled = CostConfig::new(costs.delete_weight() * k, costs.insert_weight() * k, costs.rename_weight() * k).unwrap();
        prop_assert!((dist(&a, &b, &scaled) - k * d).abs() <= 1e-9 * k.max(1.0) * (1.0 + d));
    }

    #[test]
    fn mirroring_both_trees_preserves_distance(a in arb_tree(12), b in arb_tree(12), costs in weights()) {
        prop_assert!((dist(&a, &b, &costs) - dist(&mirror(&a), &mirror(&b), &costs)).abs() <= 1e-9);
    }

    #[test]
    fn bracket_round_trip(a in arb_tree(30)) {
        let back = SyntaxTree::from_bracket(&a.to_bracket()).unwrap();
        prop_assert_eq!(&back, &a);
        let root = a.root();
        prop_assert_eq!(root.subtree_size(), 1 + root.children().map(|c| c.subtree_size()).sum::<usize>());
    }
}

#[test]
fn escaped_labels_round_trip() {
    let node = TreeNode::new(
        "{",
        vec![
            TreeNode::leaf("}"),
            TreeNode::leaf("\\"),
            TreeNode::leaf("a b"),
        ],
    );
    let tree = SyntaxTree::from_node(&node).unwrap();
    assert_eq!(tree.to_bracket(), r"{\{{\}}{\\}{a b}}");
    assert_eq!(SyntaxTree::from_bracket(&tree.to_bracket()).unwrap(), tree);
}

#[test]
fn large_trees_stay_exact_on_identity() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
    for _ in 0..5 {
        let t = common::random_tree(&mut rng, 400);
        assert_eq!(dist(&t, &t, &CostConfig::UNIT), 0.0);
    }
}
