use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn tsed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = tsed(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_dataset_subset(dir: &Path, n: usize) -> PathBuf {
    let full = std::fs::read_to_string(fixtures().join("dataset.jsonl")).unwrap();
    let lines: Vec<&str> = full
        .lines()
        .filter(|l| !l.trim().is_empty())
        .take(n)
        .collect();
    let out = dir.join("subset.jsonl");
    std::fs::write(&out, lines.join("\n")).unwrap();
    out
}

#[test]
fn compare_identical_file_scores_one() {
    let file = fixtures().join("languages/java/A.java");
    let v = json_ok(&["compare", path(&file), path(&file), "--lang", "java"]);
    assert_eq!(v["tsed"], 1.0);
    assert_eq!(v["delta"], 0.0);
    assert_eq!(v["bleu"], 1.0);
    assert_eq!(v["jaccard"], 1.0);
    assert!(v.get("llm").is_none());
}

#[test]
fn unknown_language_is_a_usage_error() {
    let file = fixtures().join("languages/java/A.java");
    let out = tsed(&["compare", path(&file), path(&file), "--lang", "cobol"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cobol"));
}

#[test]
fn negative_weight_is_a_usage_error() {
    let file = fixtures().join("languages/python/a.py");
    let out = tsed(&[
        "compare",
        path(&file),
        path(&file),
        "--lang",
        "python",
        "--insert-weight=-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let out = tsed(&[
        "compare",
        "/nonexistent/a.py",
        "/nonexistent/b.py",
        "--lang",
        "python",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rename_weight_changes_the_score() {
    let dir = fixtures().join("languages/python");
    let (a, b) = (dir.join("a.py"), dir.join("b.py"));
    let unit = json_ok(&["compare", path(&a), path(&b), "--lang", "python"]);
    let cheap = json_ok(&[
        "compare",
        path(&a),
        path(&b),
        "--lang",
        "python",
        "--rename-weight",
        "0.2",
    ]);
    assert!(cheap["tsed"].as_f64().unwrap() > unit["tsed"].as_f64().unwrap());
}

#[test]
fn batch_writes_one_row_per_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_dataset_subset(tmp.path(), 6);
    let csv = tmp.path().join("scores.csv");
    let summary = json_ok(&["batch", path(&data), "--out", path(&csv)]);
    assert_eq!(summary["overall"]["count"], 6);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("id,language,tsed,bleu,jaccard,execution_match"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn metric_selection_limits_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_dataset_subset(tmp.path(), 4);
    let csv = tmp.path().join("scores.csv");
    json_ok(&[
        "batch",
        path(&data),
        "--metrics",
        "tsed,jaccard",
        "--out",
        path(&csv),
    ]);
    let header = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.contains("tsed") && header.contains("jaccard"));
    assert!(!header.contains("bleu"));

    let out = tsed(&["batch", path(&data), "--metrics", "tsed,llm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threshold_on_separable_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("scores.csv");
    std::fs::write(
        &csv,
        "id,language,tsed,execution_match\n\
         a,python,0.9,1\nb,python,0.8,1\nc,python,0.3,0\nd,python,0.2,0\n",
    )
    .unwrap();
    let v = json_ok(&["threshold", path(&csv)]);
    assert_eq!(v["overall"]["f1"], 1.0);
    assert_eq!(v["overall"]["accuracy"], 1.0);
    let t = v["overall"]["threshold"].as_f64().unwrap();
    assert!((0.3..0.8).contains(&t));
    assert!(v["by_language"]["python"]["f1"].is_number());
}

#[test]
fn correlate_identical_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("scores.csv");
    std::fs::write(
        &csv,
        "id,language,tsed,bleu\na,java,0.1,0.1\nb,java,0.5,0.5\nc,java,0.7,0.7\n",
    )
    .unwrap();
    let v = json_ok(&["correlate", path(&csv)]);
    let names: Vec<&str> = v["overall"]["metric_names"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_str().unwrap())
        .collect();
    assert_eq!(names, ["tsed", "bleu"]);
    let r = v["overall"]["r"][0][1].as_f64().unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}

#[test]
fn languages_lists_pins() {
    let v = json_ok(&["languages"]);
    let java = v["languages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["name"] == "java")
        .expect("java registered");
    assert_eq!(java["grammar"], "tree-sitter-java");
    assert_eq!(v["backend"]["name"], "tree-sitter");
}

#[test]
fn sweep_emits_one_row_per_weight() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_dataset_subset(tmp.path(), 8);
    let out = tsed(&[
        "sweep",
        path(&data),
        "--op",
        "rename",
        "--from",
        "0.5",
        "--to",
        "1.0",
        "--step",
        "0.25",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "weight,correlation,error");
    assert_eq!(rows.len(), 4);
}

#[test]
fn replay_runs_are_deterministic_and_write_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixtures().join("dataset.jsonl");
    let replay = fixtures().join("llm_replay.json");
    let run = |name: &str| {
        let csv = tmp.path().join(name);
        json_ok(&[
            "batch",
            path(&data),
            "--llm",
            "replay",
            "--fixtures",
            path(&replay),
            "--out",
            path(&csv),
        ]);
        let manifest: Value = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join(format!("{name}.manifest.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["mode"], "replay");
        assert_eq!(manifest["command"], "batch");
        std::fs::read_to_string(csv).unwrap()
    };
    let strip_timings = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| l.split(',').take(8).collect::<Vec<_>>().join(","))
            .collect()
    };
    let first = strip_timings(run("one.csv"));
    let second = strip_timings(run("two.csv"));
    assert!(first[0].contains("llm"));
    assert_eq!(first, second);
}

#[test]
fn stability_requires_a_model() {
    let data = fixtures().join("dataset.jsonl");
    let out = tsed(&["stability", path(&data)]);
    assert_eq!(out.status.code(), Some(2));
}
