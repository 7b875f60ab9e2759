use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use super::{compute_metric, EvalConfig, Metric, Sample};
use crate::llm::ChatTransport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingStat {
    #[serde(serialize_with = "four_significant")]
    pub mean_ms: f64,
    pub measurements: usize,
}

fn four_significant<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*value, 4))
}

pub fn round_significant(value: f64, digits: i32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let magnitude = value.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - magnitude);
    (value * scale).round() / scale
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub repeats: usize,
    pub by_language: BTreeMap<String, BTreeMap<Metric, TimingStat>>,
    pub overall: BTreeMap<Metric, TimingStat>,
    /// Metrics left out, with the reason (LLM timings need a live model).
    pub skipped: BTreeMap<Metric, String>,
}

impl BenchReport {
    pub fn mean_ms(&self, metric: Metric) -> Option<f64> {
        self.overall.get(&metric).map(|s| s.mean_ms)
    }
}

#[derive(Default)]
struct Accumulator {
    total: Duration,
    count: usize,
}

impl Accumulator {
    fn stat(&self) -> TimingStat {
        TimingStat {
            mean_ms: self.total.as_secs_f64() * 1e3 / self.count.max(1) as f64,
            measurements: self.count,
        }
    }
}

/// Mean wall-clock time per metric call, per language and overall.
///
/// Runs on the calling thread only. Each measurement covers one metric on
/// one pair, including tokenizing/parsing but not dataset I/O. Failed metric
/// calls are timed like successful ones.
pub fn timing_benchmark(
    samples: &[Sample],
    cfg: &EvalConfig,
    repeats: usize,
    transport: Option<&dyn ChatTransport>,
) -> BenchReport {
    let repeats = repeats.max(1);
    let mut report = BenchReport {
        repeats,
        ..BenchReport::default()
    };
    let mut metrics = Vec::new();
    for &metric in cfg.metrics.metrics() {
        if metric == Metric::Llm && !transport.is_some_and(|t| t.is_live()) {
            report
                .skipped
                .insert(metric, "timed only against a live model".into());
        } else {
            metrics.push(metric);
        }
    }

    let mut by_language: BTreeMap<String, BTreeMap<Metric, Accumulator>> = BTreeMap::new();
    let mut overall: BTreeMap<Metric, Accumulator> = BTreeMap::new();
    for sample in samples {
        for _ in 0..repeats {
            for &metric in &metrics {
                let start = Instant::now();
                let _ = std::hint::black_box(compute_metric(metric, sample, cfg, transport));
                let elapsed = start.elapsed();
                for acc in [
                    by_language
                        .entry(sample.language.to_string())
                        .or_default()
                        .entry(metric)
                        .or_default(),
                    overall.entry(metric).or_default(),
                ] {
                    acc.total += elapsed;
                    acc.count += 1;
                }
            }
        }
    }
    report.by_language = by_language
        .into_iter()
        .map(|(lang, m)| (lang, m.into_iter().map(|(k, a)| (k, a.stat())).collect()))
        .collect();
    report.overall = overall.into_iter().map(|(k, a)| (k, a.stat())).collect();
    report
}
