//! Structural similarity judged by a chat-completion model.
//!
//! The model is asked for a score between 0 and 1 written as `[[0.777]]`.
//! Requests go through a [`ChatTransport`]: [`ReplayTransport`] serves
//! recorded responses keyed by the SHA-256 of the prompt (the default for
//! tests and reproducible runs), [`LiveTransport`] talks to an
//! OpenAI-compatible endpoint, and [`RecordingTransport`] wraps a live
//! transport to produce new fixture files.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[cfg(feature = "live")]
mod live;
#[cfg(feature = "live")]
pub use live::{LiveConfig, LiveTransport};

/// Appended to the prompt when a response carried no usable score.
pub const RETRY_REMINDER: &str = "Respond ONLY with the bracketed score.";

/// Attempts per pair before giving up on extraction.
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("no recorded response for prompt {0}")]
    MissingFixture(String),
    #[error("fixture file {path}: {reason}")]
    Fixture { path: String, reason: String },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("request failed: {0}")]
    Request(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("missing API key: set {0}")]
    MissingKey(&'static str),
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("no [[score]] found in response")]
    NoScore,
    #[error("score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("no usable score after {attempts} attempts; last response: {last_response:?}")]
    ExtractionExhausted {
        attempts: usize,
        last_response: String,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("need at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("run {run} has {found} samples, expected {expected}")]
    ShapeMismatch {
        run: usize,
        expected: usize,
        found: usize,
    },
    #[error("runs are empty")]
    Empty,
}

/// A rendered scoring request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoringPrompt {
    pub language_name: String,
    pub code1: String,
    pub code2: String,
    pub rendered: String,
}

impl ScoringPrompt {
    pub fn hash(&self) -> String {
        prompt_hash(&self.rendered)
    }
}

/// Renders the scoring prompt. `language_name` is the display name
/// ("Java", "C#"), see [`crate::parser::Registry::display_name`].
pub fn build_prompt(language_name: &str, code1: &str, code2: &str) -> ScoringPrompt {
    let mut rendered = format!(
        "Given 2 {language_name} code paragraphs, please generate a similarity score from 0 to 1 \
         (to three decimal places), by grammar parsing structure. Answer with a format like [[0.777]].\n\n"
    );
    for (title, code) in [("=====Code 1=====", code1), ("=====Code 2=====", code2)] {
        rendered.push_str(title);
        rendered.push('\n');
        rendered.push_str(code);
        if !code.ends_with('\n') {
            rendered.push('\n');
        }
    }
    rendered.push_str("=====End=====\n");
    ScoringPrompt {
        language_name: language_name.to_owned(),
        code1: code1.to_owned(),
        code2: code2.to_owned(),
        rendered,
    }
}

/// Hex SHA-256 of the exact prompt text sent to the model.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

static SCORE_PATTERN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\[\[\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*\]\]").unwrap());

/// Pulls the first `[[x]]` out of a response. Values outside `[0, 1]` are
/// rejected, not clamped.
pub fn extract_score(response: &str) -> Result<f64, LlmError> {
    let mut matches = SCORE_PATTERN.captures_iter(response);
    let first = matches.next().ok_or(LlmError::NoScore)?;
    if matches.next().is_some() {
        log::warn!("response contains several [[scores]], using the first");
    }
    let value: f64 = first[1].parse().map_err(|_| LlmError::NoScore)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(LlmError::OutOfRange(value));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmScore {
    pub value: f64,
    pub raw_response: String,
    /// 1-based attempt that produced the score.
    pub attempt: usize,
}

/// Something that answers a prompt with the model's text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, TransportError>;

    /// Whether timings from this transport reflect a real model round-trip.
    fn is_live(&self) -> bool {
        false
    }
}

/// Sends the prompt and extracts a score, re-asking with [`RETRY_REMINDER`]
/// appended when the response has no usable score.
pub fn score_prompt(
    prompt: &ScoringPrompt,
    transport: &dyn ChatTransport,
    max_attempts: usize,
) -> Result<LlmScore, LlmError> {
    let max_attempts = max_attempts.max(1);
    let mut last_response = String::new();
    for attempt in 1..=max_attempts {
        let text = if attempt == 1 {
            prompt.rendered.clone()
        } else {
            format!("{}\n{RETRY_REMINDER}", prompt.rendered)
        };
        let response = transport.complete(&text)?;
        match extract_score(&response) {
            Ok(value) => {
                return Ok(LlmScore {
                    value,
                    raw_response: response,
                    attempt,
                })
            }
            Err(e) => {
                log::debug!("attempt {attempt}: {e}");
                last_response = response;
            }
        }
    }
    Err(LlmError::ExtractionExhausted {
        attempts: max_attempts,
        last_response,
    })
}

pub fn score_pair(
    language_name: &str,
    code1: &str,
    code2: &str,
    transport: &dyn ChatTransport,
) -> Result<LlmScore, LlmError> {
    score_prompt(
        &build_prompt(language_name, code1, code2),
        transport,
        DEFAULT_MAX_ATTEMPTS,
    )
}

/// One recorded exchange in a fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub prompt_hash: String,
    pub response_text: String,
}

/// Serves recorded responses; unknown prompts are an error.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    responses: HashMap<String, String>,
}

impl ReplayTransport {
    pub fn new(records: Vec<RecordedResponse>) -> Self {
        let mut responses = HashMap::new();
        for record in records {
            if responses.contains_key(&record.prompt_hash) {
                log::warn!(
                    "duplicate fixture for {}, keeping the first",
                    record.prompt_hash
                );
                continue;
            }
            responses.insert(record.prompt_hash, record.response_text);
        }
        ReplayTransport { responses }
    }

    /// Reads a JSON array of `{prompt_hash, response_text}` objects.
    pub fn from_file(path: &Path) -> Result<Self, TransportError> {
        let fixture_err = |reason: String| TransportError::Fixture {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let records: Vec<RecordedResponse> =
            serde_json::from_str(&text).map_err(|e| fixture_err(e.to_string()))?;
        Ok(Self::new(records))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let hash = prompt_hash(prompt);
        self.responses
            .get(&hash)
            .cloned()
            .ok_or(TransportError::MissingFixture(hash))
    }
}

/// Passes requests through and remembers every response.
pub struct RecordingTransport<T> {
    inner: T,
    records: Mutex<Vec<RecordedResponse>>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    /// Recorded exchanges sorted by hash, so fixture files diff cleanly.
    pub fn records(&self) -> Vec<RecordedResponse> {
        let mut records = self.records.lock().unwrap().clone();
        records.sort_by(|a, b| a.prompt_hash.cmp(&b.prompt_hash));
        records.dedup_by(|a, b| a.prompt_hash == b.prompt_hash);
        records
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(&self.records())?;
        std::fs::write(path, json + "\n")
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let response = self.inner.complete(prompt)?;
        self.records.lock().unwrap().push(RecordedResponse {
            prompt_hash: prompt_hash(prompt),
            response_text: response.clone(),
        });
        Ok(response)
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

/// Repeat-run drift measured against the first run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub run_count: usize,
    /// Entry `k` compares run `k + 2` with run 1.
    pub mse_per_run: Vec<f64>,
    pub mae_per_run: Vec<f64>,
}

/// `scores_by_run[r][s]` is the score of sample `s` in run `r`.
pub fn stability_report(scores_by_run: &[Vec<f64>]) -> Result<StabilityReport, StabilityError> {
    if scores_by_run.len() < 2 {
        return Err(StabilityError::TooFewRuns(scores_by_run.len()));
    }
    let baseline = &scores_by_run[0];
    if baseline.is_empty() {
        return Err(StabilityError::Empty);
    }
    let n = baseline.len() as f64;
    let mut mse_per_run = Vec::new();
    let mut mae_per_run = Vec::new();
    for (index, run) in scores_by_run.iter().enumerate().skip(1) {
        if run.len() != baseline.len() {
            return Err(StabilityError::ShapeMismatch {
                run: index + 1,
                expected: baseline.len(),
                found: run.len(),
            });
        }
        let (mut squared, mut absolute) = (0.0, 0.0);
        for (x, base) in run.iter().zip(baseline) {
            let d = x - base;
            squared += d * d;
            absolute += d.abs();
        }
        mse_per_run.push(squared / n);
        mae_per_run.push(absolute / n);
    }
    Ok(StabilityReport {
        run_count: scores_by_run.len(),
        mse_per_run,
        mae_per_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Scripted {
        replies: Vec<&'static str>,
        calls: AtomicUsize,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: Vec<&'static str>) -> Self {
            Scripted {
                replies,
                calls: AtomicUsize::new(0),
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl ChatTransport for Scripted {
        fn complete(&self, prompt: &str) -> Result<String, TransportError> {
            self.prompts.lock().unwrap().push(prompt.to_owned());
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.replies[i.min(self.replies.len() - 1)].to_owned())
        }
    }

    #[test]
    fn prompt_layout() {
        let p = build_prompt("Java", "int a;", "int b;\n");
        assert_eq!(p.rendered.matches("=====Code 1=====").count(), 1);
        assert_eq!(p.rendered.matches("=====Code 2=====").count(), 1);
        assert_eq!(p.rendered.matches("=====End=====").count(), 1);
        assert!(p
            .rendered
            .starts_with("Given 2 Java code paragraphs, please generate a similarity score"));
        assert!(p.rendered.contains("Answer with a format like [[0.777]]."));
        assert!(p
            .rendered
            .ends_with("=====Code 1=====\nint a;\n=====Code 2=====\nint b;\n=====End=====\n"));
        assert_eq!(p, build_prompt("Java", "int a;", "int b;\n"));
        assert!(build_prompt("Python", "a", "b")
            .rendered
            .contains("Given 2 Python code"));
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_score("[[0.777]]").unwrap(), 0.777);
        assert_eq!(extract_score("The score is [[1.000]].").unwrap(), 1.0);
        assert_eq!(extract_score("[[ 0 ]]").unwrap(), 0.0);
        assert_eq!(extract_score("[[.5]] then [[0.9]]").unwrap(), 0.5);
        assert!(matches!(
            extract_score("similarity 0.8"),
            Err(LlmError::NoScore)
        ));
        assert!(matches!(extract_score("[0.8]"), Err(LlmError::NoScore)));
        assert!(matches!(extract_score("[[1.500]]"), Err(LlmError::OutOfRange(v)) if v == 1.5));
        assert!(matches!(
            extract_score("[[-0.1]]"),
            Err(LlmError::OutOfRange(_))
        ));
    }

    #[test]
    fn retries_with_reminder() {
        let transport = Scripted::new(vec!["I think they are similar", "[[0.640]]"]);
        let score = score_pair("Java", "a", "b", &transport).unwrap();
        assert_eq!(score.value, 0.64);
        assert_eq!(score.attempt, 2);
        let prompts = transport.prompts.lock().unwrap();
        assert!(!prompts[0].contains(RETRY_REMINDER));
        assert!(prompts[1].ends_with(RETRY_REMINDER));
    }

    #[test]
    fn exhausts_after_three_bad_replies() {
        let transport = Scripted::new(vec!["nope"]);
        let err = score_pair("Java", "a", "b", &transport).unwrap_err();
        assert!(matches!(
            err,
            LlmError::ExtractionExhausted { attempts: 3, .. }
        ));
        assert_eq!(transport.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn replay_and_record() {
        let prompt = build_prompt("Python", "x = 1", "y = 2");
        let replay = ReplayTransport::new(vec![RecordedResponse {
            prompt_hash: prompt.hash(),
            response_text: "[[0.675]]".into(),
        }]);
        let recorder = RecordingTransport::new(replay);
        let score = score_prompt(&prompt, &recorder, 3).unwrap();
        assert_eq!(score.value, 0.675);
        assert_eq!(score.raw_response, "[[0.675]]");
        assert_eq!(recorder.records().len(), 1);

        let other = build_prompt("Python", "x = 1", "z = 3");
        assert!(matches!(
            score_prompt(&other, &recorder, 3),
            Err(LlmError::Transport(TransportError::MissingFixture(_)))
        ));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.json");
        recorder.save(&path).unwrap();
        let reloaded = ReplayTransport::from_file(&path).unwrap();
        assert_eq!(score_prompt(&prompt, &reloaded, 3).unwrap().value, 0.675);
    }

    #[test]
    fn stability_hand_cases() {
        let same = stability_report(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(same.mse_per_run, [0.0]);
        assert_eq!(same.mae_per_run, [0.0]);

        let flipped = stability_report(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(flipped.mse_per_run, [1.0]);
        assert_eq!(flipped.mae_per_run, [1.0]);

        let drift = stability_report(&[vec![0.5, 0.5], vec![0.6, 0.3]]).unwrap();
        assert!((drift.mse_per_run[0] - 0.025).abs() < 1e-9);
        assert!((drift.mae_per_run[0] - 0.15).abs() < 1e-9);
        assert_eq!(drift.run_count, 2);

        assert_eq!(
            stability_report(&[vec![0.1]]),
            Err(StabilityError::TooFewRuns(1))
        );
        assert!(matches!(
            stability_report(&[vec![0.1, 0.2], vec![0.1]]),
            Err(StabilityError::ShapeMismatch { run: 2, .. })
        ));
    }
}
