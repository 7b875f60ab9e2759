//! Batch evaluation over JSONL datasets.
//!
//! A dataset line looks like
//!
//! ```json
//! {"id": "py-1", "language": "python", "prediction": "...", "reference": "...", "execution_match": 1}
//! ```
//!
//! [`evaluate`] turns samples into [`MetricVector`]s; the submodules analyse
//! those vectors (correlations, execution-match thresholds, weight sweeps,
//! timings) and read/write the report files.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{bleu, jaccard, tokenize, BleuConfig, BleuError};
use crate::llm::{build_prompt, score_prompt, ChatTransport, LlmError, DEFAULT_MAX_ATTEMPTS};
use crate::metric::{tsed, TsedScore};
use crate::parser::{Frontend, LanguageId, ParseError};
use crate::ted::CostConfig;

pub mod bench;
pub mod report;
pub mod stats;
pub mod sweep;

pub use bench::{timing_benchmark, BenchReport, TimingStat};
pub use stats::{
    apply_threshold, correlation_matrix, optimize_threshold, pearson, CorrelationMatrix,
    StatsError, ThresholdResult, DEFAULT_THRESHOLD_STEP,
};
pub use sweep::{weight_sweep, SweepPoint};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid dataset:\n{}", format_problems(.0))]
    Schema(Vec<SchemaProblem>),
    #[error("the llm metric needs a chat transport")]
    MissingTransport,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid sweep grid value {0}")]
    InvalidGrid(f64),
    #[error("{0}")]
    Report(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaProblem {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

fn format_problems(problems: &[SchemaProblem]) -> String {
    problems
        .iter()
        .map(|p| format!("  line {}: {}", p.line, p.message))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One prediction/reference pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub language: LanguageId,
    pub prediction: String,
    pub reference: String,
    #[serde(
        default,
        with = "binary_label",
        skip_serializing_if = "Option::is_none"
    )]
    pub execution_match: Option<bool>,
}

/// Execution-match labels travel as 0/1.
pub(crate) mod binary_label {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_u8(*v as u8),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        match Option::<u64>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            Some(other) => Err(serde::de::Error::custom(format!(
                "execution_match must be 0 or 1, got {other}"
            ))),
        }
    }
}

pub fn load_dataset(path: &Path) -> Result<Vec<Sample>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(std::io::BufReader::new(file)).map_err(|e| match e {
        HarnessError::Io { source, .. } => HarnessError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses JSONL, collecting every bad line before failing. Blank lines are
/// skipped.
pub fn parse_dataset(reader: impl BufRead) -> Result<Vec<Sample>, HarnessError> {
    let mut samples = Vec::new();
    let mut problems = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: "<dataset>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Sample>(&line) {
            Ok(sample) => samples.push(sample),
            Err(e) => problems.push(SchemaProblem {
                line: index + 1,
                message: e.to_string(),
            }),
        }
    }
    if problems.is_empty() {
        Ok(samples)
    } else {
        Err(HarnessError::Schema(problems))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tsed,
    Bleu,
    Jaccard,
    Llm,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Tsed, Metric::Bleu, Metric::Jaccard, Metric::Llm];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tsed => "tsed",
            Metric::Bleu => "bleu",
            Metric::Jaccard => "jaccard",
            Metric::Llm => "llm",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsed" => Ok(Metric::Tsed),
            "bleu" => Ok(Metric::Bleu),
            "jaccard" => Ok(Metric::Jaccard),
            "llm" | "gpt" => Ok(Metric::Llm),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// A column of a [`MetricVector`] usable in correlations and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Metric(Metric),
    ExecutionMatch,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::Metric(m) => m.name(),
            Column::ExecutionMatch => "execution_match",
        }
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "execution_match" | "execution" | "exec" => Ok(Column::ExecutionMatch),
            other => other.parse().map(Column::Metric),
        }
    }
}

/// Ordered, duplicate-free set of metrics to compute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSelection(Vec<Metric>);

impl MetricSelection {
    pub fn new(metrics: impl IntoIterator<Item = Metric>) -> Self {
        let mut v: Vec<Metric> = metrics.into_iter().collect();
        v.sort();
        v.dedup();
        MetricSelection(v)
    }

    /// TSED, BLEU and Jaccard: everything that needs no model.
    pub fn offline() -> Self {
        Self::new([Metric::Tsed, Metric::Bleu, Metric::Jaccard])
    }

    pub fn all() -> Self {
        Self::new(Metric::ALL)
    }

    pub fn contains(&self, metric: Metric) -> bool {
        self.0.contains(&metric)
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.0
    }
}

impl FromStr for MetricSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let metrics = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Metric>, _>>()?;
        if metrics.is_empty() {
            return Err("no metrics selected".into());
        }
        Ok(MetricSelection::new(metrics))
    }
}

/// Per-sample scores. Absent entries were not selected or failed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    pub sample_id: String,
    pub language: String,
    pub tsed: Option<f64>,
    pub bleu: Option<f64>,
    pub jaccard: Option<f64>,
    pub llm: Option<f64>,
    #[serde(default, with = "binary_label")]
    pub execution_match: Option<bool>,
    /// Whether either side of the TSED pair parsed with errors.
    pub parse_errors: Option<bool>,
    #[serde(skip)]
    pub timings: BTreeMap<Metric, Duration>,
}

impl MetricVector {
    pub fn score(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Tsed => self.tsed,
            Metric::Bleu => self.bleu,
            Metric::Jaccard => self.jaccard,
            Metric::Llm => self.llm,
        }
    }

    pub fn set_score(&mut self, metric: Metric, value: Option<f64>) {
        let slot = match metric {
            Metric::Tsed => &mut self.tsed,
            Metric::Bleu => &mut self.bleu,
            Metric::Jaccard => &mut self.jaccard,
            Metric::Llm => &mut self.llm,
        };
        *slot = value;
    }

    pub fn column(&self, column: Column) -> Option<f64> {
        match column {
            Column::Metric(m) => self.score(m),
            Column::ExecutionMatch => self.execution_match.map(|b| if b { 1.0 } else { 0.0 }),
        }
    }
}

/// Everything [`evaluate`] needs besides the samples.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub metrics: MetricSelection,
    pub costs: CostConfig,
    pub bleu: BleuConfig,
    pub frontend: Frontend,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            metrics: MetricSelection::offline(),
            costs: CostConfig::UNIT,
            bleu: BleuConfig::default(),
            frontend: Frontend::default(),
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub metric: Metric,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    /// One vector per sample, in input order.
    pub vectors: Vec<MetricVector>,
    pub failures: Vec<SampleFailure>,
}

/// Failure of a single metric on a single sample.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Bleu(#[from] BleuError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

pub(crate) fn compute_metric(
    metric: Metric,
    sample: &Sample,
    cfg: &EvalConfig,
    transport: Option<&dyn ChatTransport>,
) -> Result<(f64, Option<TsedScore>), MetricError> {
    match metric {
        Metric::Tsed => {
            let s = tsed(
                &cfg.frontend,
                &sample.prediction,
                &sample.reference,
                &sample.language,
                &cfg.costs,
            )?;
            Ok((s.value, Some(s)))
        }
        Metric::Bleu => Ok((
            bleu(
                &tokenize(&sample.prediction),
                &tokenize(&sample.reference),
                &cfg.bleu,
            )?,
            None,
        )),
        Metric::Jaccard => Ok((
            jaccard(&tokenize(&sample.prediction), &tokenize(&sample.reference)),
            None,
        )),
        Metric::Llm => {
            let transport = transport.expect("checked by caller");
            let display = cfg
                .frontend
                .registry()
                .display_name(&sample.language)
                .unwrap_or(sample.language.as_str())
                .to_owned();
            let prompt = build_prompt(&display, &sample.prediction, &sample.reference);
            Ok((
                score_prompt(&prompt, transport, DEFAULT_MAX_ATTEMPTS)?.value,
                None,
            ))
        }
    }
}

fn evaluate_one(
    sample: &Sample,
    cfg: &EvalConfig,
    transport: Option<&dyn ChatTransport>,
) -> (MetricVector, Vec<SampleFailure>) {
    let mut vector = MetricVector {
        sample_id: sample.id.clone(),
        language: sample.language.to_string(),
        execution_match: sample.execution_match,
        ..MetricVector::default()
    };
    let mut failures = Vec::new();
    for &metric in cfg.metrics.metrics() {
        let start = Instant::now();
        let result = compute_metric(metric, sample, cfg, transport);
        vector.timings.insert(metric, start.elapsed());
        match result {
            Ok((value, tsed_detail)) => {
                vector.set_score(metric, Some(value));
                if let Some(detail) = tsed_detail {
                    vector.parse_errors = Some(detail.had_parse_errors());
                }
            }
            Err(e) => failures.push(SampleFailure {
                sample_id: sample.id.clone(),
                metric,
                message: e.to_string(),
            }),
        }
    }
    (vector, failures)
}

/// Scores every sample with the selected metrics. Per-sample failures are
/// collected in [`Evaluation::failures`] rather than aborting the batch.
pub fn evaluate(
    samples: &[Sample],
    cfg: &EvalConfig,
    transport: Option<&dyn ChatTransport>,
) -> Result<Evaluation, HarnessError> {
    if cfg.metrics.contains(Metric::Llm) && transport.is_none() {
        return Err(HarnessError::MissingTransport);
    }
    let run = || -> Vec<(MetricVector, Vec<SampleFailure>)> {
        samples
            .par_iter()
            .map(|s| evaluate_one(s, cfg, transport))
            .collect()
    };
    let results = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| HarnessError::Report(e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut evaluation = Evaluation::default();
    for (vector, failures) in results {
        evaluation.vectors.push(vector);
        evaluation.failures.extend(failures);
    }
    Ok(evaluation)
}
