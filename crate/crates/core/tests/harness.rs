mod common;

use proptest::prelude::*;
use tsed::baseline::{bleu, jaccard, tokenize, BleuConfig, TokenSequence};
use tsed::harness::stats::paired_column;
use tsed::harness::{
    apply_threshold, correlation_matrix, evaluate, optimize_threshold, pearson, timing_benchmark,
    Column, EvalConfig, Metric, MetricSelection, DEFAULT_THRESHOLD_STEP,
};
use tsed::llm::{extract_score, stability_report, ReplayTransport};

fn replay() -> ReplayTransport {
    ReplayTransport::from_file(&common::fixture_dir().join("llm_replay.json")).unwrap()
}

fn all_columns() -> Vec<Column> {
    let mut columns: Vec<Column> = Metric::ALL.iter().map(|&m| Column::Metric(m)).collect();
    columns.push(Column::ExecutionMatch);
    columns
}

#[test]
fn evaluate_preserves_order_and_is_thread_count_independent() {
    let samples = common::dataset();
    let single = EvalConfig {
        jobs: Some(1),
        ..EvalConfig::default()
    };
    let a = evaluate(&samples, &single, None).unwrap();
    let b = evaluate(&samples, &EvalConfig::default(), None).unwrap();
    assert_eq!(a.vectors.len(), samples.len());
    for ((x, y), s) in a.vectors.iter().zip(&b.vectors).zip(&samples) {
        assert_eq!(x.sample_id, s.id);
        assert_eq!((x.tsed, x.bleu, x.jaccard), (y.tsed, y.bleu, y.jaccard));
        assert_eq!(x.execution_match, s.execution_match);
    }
    assert!(a.failures.is_empty());
}

#[test]
fn replayed_llm_scores() {
    let samples = common::dataset();
    let cfg = EvalConfig {
        metrics: MetricSelection::all(),
        ..EvalConfig::default()
    };
    let transport = replay();
    let first = evaluate(&samples, &cfg, Some(&transport)).unwrap();
    let second = evaluate(&samples, &cfg, Some(&transport)).unwrap();
    assert!(first.failures.is_empty(), "{:?}", first.failures);
    let scores: Vec<f64> = first.vectors.iter().map(|v| v.llm.unwrap()).collect();
    let again: Vec<f64> = second.vectors.iter().map(|v| v.llm.unwrap()).collect();
    assert_eq!(scores, again);
    // The first sample's recorded answer has no score and is re-asked.
    assert_eq!(scores[0], 0.271);
}

#[test]
fn correlation_matrix_entries_are_pearson() {
    let samples = common::dataset();
    let cfg = EvalConfig {
        metrics: MetricSelection::all(),
        ..EvalConfig::default()
    };
    let eval = evaluate(&samples, &cfg, Some(&replay())).unwrap();
    let columns = all_columns();
    let matrix = correlation_matrix(&eval.vectors, &columns).unwrap();
    for (i, &a) in columns.iter().enumerate() {
        assert_eq!(matrix.r[i][i], Some(1.0));
        for (j, &b) in columns.iter().enumerate() {
            let (xs, ys) = paired_column(&eval.vectors, a, b);
            assert_eq!(matrix.r[i][j], Some(pearson(&xs, &ys).unwrap()));
            assert_eq!(matrix.r[i][j], matrix.r[j][i]);
        }
    }
    assert!(matrix.get("tsed", "bleu").unwrap() > 0.5);
}

#[test]
fn missing_scores_are_dropped_per_pair() {
    let samples = common::dataset();
    let mut eval = evaluate(&samples, &EvalConfig::default(), None).unwrap();
    eval.vectors[0].bleu = None;
    let columns = [
        Column::Metric(Metric::Tsed),
        Column::Metric(Metric::Bleu),
        Column::Metric(Metric::Jaccard),
    ];
    let matrix = correlation_matrix(&eval.vectors, &columns).unwrap();
    let (xs, _) = paired_column(&eval.vectors, columns[0], columns[1]);
    assert_eq!(xs.len(), samples.len() - 1);
    let (xs, _) = paired_column(&eval.vectors, columns[0], columns[2]);
    assert_eq!(xs.len(), samples.len());
    assert!(matrix.r[0][1].is_some());
}

#[test]
fn bench_covers_every_language() {
    let samples = common::dataset();
    let report = timing_benchmark(&samples, &EvalConfig::default(), 1, None);
    assert_eq!(report.by_language.len(), 9);
    assert_eq!(report.overall[&Metric::Tsed].measurements, samples.len());
    let json = serde_json::to_value(&report).unwrap();
    assert!(json["overall"]["tsed"]["mean_ms"].is_number());
}

fn separable() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((any::<bool>(), 0.0f64..1.0), 2..80)
        .prop_map(|rows| rows.into_iter().map(|(l, s)| (s, l)).unzip())
}

proptest! {
    #[test]
    fn pearson_affine_invariance(
        rows in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..50),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        if let Ok(r) = pearson(&xs, &ys) {
            let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            prop_assert!((pearson(&moved, &ys).unwrap() - r).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r));
            let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
            prop_assert!((pearson(&flipped, &ys).unwrap() + r).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_is_reproducible((scores, labels) in separable()) {
        if let Ok(best) = optimize_threshold(&scores, &labels, DEFAULT_THRESHOLD_STEP) {
            let again = apply_threshold(&scores, &labels, best.threshold);
            prop_assert_eq!(again, best);
            for t in [0.0, 0.5, 1.0] {
                prop_assert!(apply_threshold(&scores, &labels, t).f1 <= best.f1);
            }
        }
    }

    #[test]
    fn baseline_ranges(a in "[a-z (),+=]{1,40}", b in "[a-z (),+=]{1,40}") {
        let (ta, tb) = (tokenize(&a), tokenize(&b));
        let j = jaccard(&ta, &tb);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard(&tb, &ta));
        if !tb.is_empty() {
            let s = bleu(&ta, &tb, &BleuConfig::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
        if !ta.is_empty() {
            prop_assert_eq!(bleu(&ta, &ta, &BleuConfig::default()).unwrap(), 1.0);
        }
    }

    #[test]
    fn jaccard_ignores_order_and_multiplicity(tokens in prop::collection::vec("[a-d]", 1..12), other in prop::collection::vec("[a-d]", 1..12)) {
        let mut shuffled = tokens.clone();
        shuffled.reverse();
        shuffled.extend(tokens.iter().take(3).cloned());
        let a = TokenSequence::new(tokens).unwrap();
        let a2 = TokenSequence::new(shuffled).unwrap();
        let b = TokenSequence::new(other).unwrap();
        prop_assert_eq!(jaccard(&a, &b), jaccard(&a2, &b));
    }

    #[test]
    fn three_decimal_scores_extract(k in 0u32..=1000, noise in "[a-z .:]{0,20}") {
        let x = f64::from(k) / 1000.0;
        let response = format!("{noise}[[{x:.3}]]{noise}");
        prop_assert_eq!(extract_score(&response).unwrap(), x);
    }

    #[test]
    fn identical_runs_are_stable(run in prop::collection::vec(0.0f64..1.0, 1..20), copies in 2..5usize) {
        let report = stability_report(&vec![run; copies]).unwrap();
        prop_assert!(report.mse_per_run.iter().chain(&report.mae_per_run).all(|&v| v == 0.0));
        prop_assert_eq!(report.mse_per_run.len(), copies - 1);
    }
}
