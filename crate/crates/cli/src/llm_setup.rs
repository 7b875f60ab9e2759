use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;
use tsed::llm::{
    ChatTransport, LiveConfig, LiveTransport, RecordingTransport, ReplayTransport,
    DEFAULT_MAX_ATTEMPTS, RETRY_REMINDER,
};
use tsed::parser::Registry;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Off,
    Replay,
    Live,
}

enum Backend {
    Replay(ReplayTransport),
    Live(LiveTransport),
    Recording(RecordingTransport<LiveTransport>, PathBuf),
}

/// A configured transport plus what goes into the run manifest.
pub struct LlmSession {
    backend: Backend,
    manifest: serde_json::Value,
}

impl LlmSession {
    pub fn open(
        mode: LlmMode,
        fixtures: Option<&Path>,
        record: Option<&Path>,
    ) -> Result<Option<Self>, Failure> {
        if record.is_some() && mode != LlmMode::Live {
            return Err(Failure::Usage("--record only applies to --llm live".into()));
        }
        let (backend, details) = match mode {
            LlmMode::Off => return Ok(None),
            LlmMode::Replay => {
                let path = fixtures
                    .ok_or_else(|| Failure::Usage("--llm replay needs --fixtures PATH".into()))?;
                let transport = ReplayTransport::from_file(path).map_err(Failure::data)?;
                let details = json!({"fixtures": path, "recorded_responses": transport.len()});
                (Backend::Replay(transport), details)
            }
            LlmMode::Live => {
                let config = LiveConfig::from_env().map_err(Failure::data)?;
                let details = json!({
                    "endpoint": config,
                    "started_at_unix": std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                });
                let live = LiveTransport::new(config).map_err(Failure::data)?;
                match record {
                    Some(path) => (
                        Backend::Recording(RecordingTransport::new(live), path.to_owned()),
                        details,
                    ),
                    None => (Backend::Live(live), details),
                }
            }
        };
        let registry = Registry::global();
        let grammars: serde_json::Map<String, serde_json::Value> = registry
            .languages()
            .iter()
            .filter_map(|l| Some((l.to_string(), json!(registry.pin(l)?))))
            .collect();
        let manifest = json!({
            "tool": format!("tsed {}", env!("CARGO_PKG_VERSION")),
            "mode": mode,
            "transport": details,
            "max_attempts": DEFAULT_MAX_ATTEMPTS,
            "retry_reminder": RETRY_REMINDER,
            "grammars": grammars,
        });
        Ok(Some(LlmSession { backend, manifest }))
    }

    pub fn transport(&self) -> &dyn ChatTransport {
        match &self.backend {
            Backend::Replay(t) => t,
            Backend::Live(t) => t,
            Backend::Recording(t, _) => t,
        }
    }

    /// Saves recorded responses and writes the manifest to `manifest_path`,
    /// or to stderr when there is nowhere to put it.
    pub fn finish(self, command: &str, manifest_path: Option<&Path>) -> Result<(), Failure> {
        let mut manifest = self.manifest;
        manifest["command"] = json!(command);
        if let Backend::Recording(recorder, path) = &self.backend {
            recorder
                .save(path)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            manifest["recorded_to"] = json!(path);
            manifest["recorded_responses"] = json!(recorder.records().len());
        }
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        match manifest_path {
            Some(path) => std::fs::write(path, text + "\n")
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
            None => {
                eprintln!("run manifest: {text}");
                Ok(())
            }
        }
    }
}
