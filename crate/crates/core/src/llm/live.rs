//! OpenAI-compatible `/chat/completions` transport.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatTransport, TransportError};

pub const API_KEY_ENV: &str = "TSED_LLM_API_KEY";
pub const BASE_URL_ENV: &str = "TSED_LLM_BASE_URL";
pub const MODEL_ENV: &str = "TSED_LLM_MODEL";

const HTTP_RETRIES: usize = 3;

/// Sampling is pinned so repeated runs differ only by model nondeterminism.
/// The whole struct minus the key is written to run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Minimum spacing between request starts.
    pub min_interval_ms: u64,
}

impl LiveConfig {
    pub fn from_env() -> Result<Self, TransportError> {
        let api_key =
            std::env::var(API_KEY_ENV).map_err(|_| TransportError::MissingKey(API_KEY_ENV))?;
        Ok(LiveConfig {
            base_url: std::env::var(BASE_URL_ENV)
                .unwrap_or_else(|_| "https://api.openai.com/v1".into()),
            model: std::env::var(MODEL_ENV).unwrap_or_else(|_| "gpt-4".into()),
            api_key,
            temperature: 0.0,
            max_tokens: 32,
            timeout_secs: 60,
            max_in_flight: 4,
            min_interval_ms: 0,
        })
    }
}

pub struct LiveTransport {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    last_start: Mutex<Option<Instant>>,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl LiveTransport {
    pub fn new(config: LiveConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| TransportError::Request(e.to_string()))?;
        Ok(LiveTransport {
            config,
            client,
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            last_start: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn acquire(&self) {
        let limit = self.config.max_in_flight.max(1);
        let mut busy = self.in_flight.lock().unwrap();
        while *busy >= limit {
            busy = self.slot_freed.wait(busy).unwrap();
        }
        *busy += 1;
        drop(busy);

        let spacing = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_start.lock().unwrap();
        if let Some(prev) = *last {
            let wait = spacing.saturating_sub(prev.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        *last = Some(Instant::now());
    }

    fn release(&self) {
        *self.in_flight.lock().unwrap() -= 1;
        self.slot_freed.notify_one();
    }

    fn send(&self, prompt: &str) -> Result<String, TransportError> {
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut backoff = Duration::from_millis(500);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = self
                .client
                .post(&url)
                .bearer_auth(&self.config.api_key)
                .json(&body)
                .send();
            let response = match result {
                Ok(r) => r,
                Err(e) if attempt < HTTP_RETRIES && (e.is_timeout() || e.is_connect()) => {
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    continue;
                }
                Err(e) => return Err(TransportError::Request(e.to_string())),
            };
            let status = response.status();
            if status.is_success() {
                let completion: Completion = response
                    .json()
                    .map_err(|e| TransportError::Malformed(e.to_string()))?;
                return completion
                    .choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .ok_or_else(|| TransportError::Malformed("no choices in completion".into()));
            }
            let retryable = status.as_u16() == 429 || status.is_server_error();
            if retryable && attempt < HTTP_RETRIES {
                let wait = response
                    .headers()
                    .get(reqwest::header::RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.parse::<u64>().ok())
                    .map(Duration::from_secs)
                    .unwrap_or(backoff);
                std::thread::sleep(wait);
                backoff *= 2;
                continue;
            }
            return Err(TransportError::Status {
                status: status.as_u16(),
                body: response.text().unwrap_or_default(),
            });
        }
    }
}

impl ChatTransport for LiveTransport {
    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        self.acquire();
        let result = self.send(prompt);
        self.release();
        result
    }

    fn is_live(&self) -> bool {
        true
    }
}
