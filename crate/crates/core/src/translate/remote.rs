//! Completion-endpoint backend (OpenAI-compatible `chat/completions` or raw
//! `completions`).

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::prompt::{PromptTemplate, INSTRUCTION};
use super::{IntentText, TranslationBackend, TranslationFailure, TranslationResult};

pub const API_KEY_ENV: &str = "INTENTMFG_API_KEY";
pub const BASE_URL_ENV: &str = "INTENTMFG_BASE_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointShape {
    /// `POST {base}/chat/completions` with a single user message.
    #[default]
    Chat,
    /// `POST {base}/completions` with the full instruction prompt.
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    /// One request per intent; invalid output is final.
    #[default]
    Evaluation,
    /// Invalid output is re-prompted up to `reprompt_limit` times.
    Interactive,
}

fn default_timeout() -> f64 {
    30.0
}
fn default_retries() -> u32 {
    2
}
fn default_max_tokens() -> u32 {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Retries after transport errors only; HTTP error statuses are final.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub shape: EndpointShape,
    /// Greedy decoding by default.
    #[serde(default)]
    pub temperature: f32,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub reprompt_limit: u32,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            shape: EndpointShape::default(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            reprompt_limit: 0,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err("endpoint timeout must be positive".into());
        }
        if self.base_url.trim().is_empty() {
            return Err("endpoint base_url is empty".into());
        }
        Ok(())
    }

    /// Overrides token and base URL from the environment when set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            if !url.is_empty() {
                self.base_url = url;
            }
        }
        self
    }

    fn url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        match self.shape {
            EndpointShape::Chat => format!("{base}/chat/completions"),
            EndpointShape::Completion => format!("{base}/completions"),
        }
    }
}

pub struct RemoteTranslator {
    config: EndpointConfig,
    agent: ureq::Agent,
    template: PromptTemplate,
    mode: PromptMode,
}

impl RemoteTranslator {
    pub fn new(config: EndpointConfig) -> Result<Self, String> {
        config.check()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            agent,
            template: PromptTemplate::default(),
            mode: PromptMode::Evaluation,
        })
    }

    pub fn with_mode(mut self, mode: PromptMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn request_body(&self, intent: &IntentText) -> Value {
        let c = &self.config;
        match c.shape {
            // Chat servers apply their own instruction template.
            EndpointShape::Chat => json!({
                "model": c.model,
                "messages": [{
                    "role": "user",
                    "content": format!("{INSTRUCTION}\n{}", intent.as_str()),
                }],
                "max_tokens": c.max_tokens,
                "temperature": c.temperature,
            }),
            EndpointShape::Completion => json!({
                "model": c.model,
                "prompt": self.template.render(intent),
                "max_tokens": c.max_tokens,
                "temperature": c.temperature,
            }),
        }
    }

    /// One logical request with transport-level retries.
    fn complete(&self, body: &Value) -> Result<String, TranslationFailure> {
        let url = self.config.url();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let mut request = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(key) = &self.config.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            match request.send_json(body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    let text = response.body_mut().read_to_string().map_err(|e| {
                        TranslationFailure::TransportFailure { message: e.to_string(), attempts }
                    })?;
                    if !(200..300).contains(&status) {
                        return Err(TranslationFailure::TransportFailure {
                            message: format!("HTTP {status}: {}", truncate(&text, 200)),
                            attempts,
                        });
                    }
                    return completion_text(&text, self.config.shape).ok_or_else(|| {
                        TranslationFailure::TransportFailure {
                            message: format!("unexpected response body: {}", truncate(&text, 200)),
                            attempts,
                        }
                    });
                }
                Err(err) if is_transport(&err) && attempts <= self.config.max_retries => {
                    debug!(attempt = attempts, error = %err, "retrying completion request");
                    std::thread::sleep(backoff(attempts));
                }
                Err(err) => {
                    warn!(error = %err, attempts, "completion request failed");
                    return Err(TranslationFailure::TransportFailure { message: err.to_string(), attempts });
                }
            }
        }
    }
}

impl TranslationBackend for RemoteTranslator {
    fn name(&self) -> &str {
        "remote"
    }

    fn translate(&self, intent: &IntentText) -> TranslationResult {
        let started = Instant::now();
        let body = self.request_body(intent);
        let budget = match self.mode {
            PromptMode::Evaluation => 0,
            PromptMode::Interactive => self.config.reprompt_limit,
        };
        let mut result;
        let mut reprompts = 0;
        loop {
            result = match self.complete(&body) {
                Ok(raw) => TranslationResult::from_raw(raw, 0.0),
                Err(failure) => TranslationResult::failure(String::new(), failure, 0.0),
            };
            let invalid = matches!(result.failure_kind(), Some(TranslationFailure::InvalidOutput { .. }));
            if !invalid || reprompts >= budget {
                break;
            }
            reprompts += 1;
        }
        result.latency_ms = started.elapsed().as_secs_f64() * 1000.0;
        result
    }
}

/// Remote translation with a throwaway client.
pub fn translate_remote(intent: &IntentText, config: &EndpointConfig) -> TranslationResult {
    match RemoteTranslator::new(config.clone()) {
        Ok(t) => t.translate(intent),
        Err(message) => TranslationResult::failure(
            String::new(),
            TranslationFailure::TransportFailure { message, attempts: 0 },
            0.0,
        ),
    }
}

fn is_transport(err: &ureq::Error) -> bool {
    matches!(
        err,
        ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::HostNotFound
            | ureq::Error::ConnectionFailed
            | ureq::Error::Protocol(_)
            | ureq::Error::BodyStalled
    )
}

fn backoff(attempt: u32) -> Duration {
    Duration::from_millis((25u64 << attempt.min(5)).min(1000))
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn completion_text(body: &str, shape: EndpointShape) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    let choice = v.get("choices")?.get(0)?;
    let text = match shape {
        EndpointShape::Chat => choice.get("message")?.get("content")?,
        EndpointShape::Completion => choice.get("text")?,
    };
    text.as_str().map(str::to_owned)
}
