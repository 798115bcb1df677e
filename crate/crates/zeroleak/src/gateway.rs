//! Model backends: a chat-completion HTTP client with bounded retries and a
//! scripted replay backend for deterministic runs.

use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use zeroleak_core::context::{count_tokens, ConversationContext, Message};
use zeroleak_core::fingerprint;
use zeroleak_core::ledger::{best_of_index, CompletionExchange, ModelConfig};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("authentication failed (HTTP {status})")]
    AuthFailure { status: u16 },
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Protocol(String),
    #[error("replay script exhausted after {served} responses")]
    ReplayExhausted { served: usize },
    #[error("replay request {index} does not match the script (expected {expected}, got {actual})")]
    ReplayMismatch { index: usize, expected: String, actual: String },
    #[error("cannot load replay script: {0}")]
    ReplayScript(String),
}

impl GatewayError {
    fn is_transient(&self) -> bool {
        match self {
            Self::Timeout | Self::Transport(_) => true,
            Self::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// Raw result of one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    /// One entry per requested completion.
    pub choices: Vec<String>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

pub trait Backend: Send + Sync {
    fn send(&self, config: &ModelConfig, messages: &[Message]) -> Result<Completion, GatewayError>;
}

/// Replay matching key: hex XXH3-128 over the model id and the message texts.
pub fn request_fingerprint(model_id: &str, messages: &[Message]) -> String {
    fingerprint::of_strs(std::iter::once(model_id).chain(messages.iter().map(|m| m.text.as_str()))).to_string()
}

/// Sends the context and picks the best choice by `scorer` (first wins ties).
pub fn complete(
    backend: &dyn Backend,
    config: &ModelConfig,
    ctx: &ConversationContext,
    scorer: &dyn Fn(&str) -> i64,
) -> Result<CompletionExchange, GatewayError> {
    let request = ctx.to_vec();
    let start = Instant::now();
    let c = backend.send(config, &request)?;
    let latency = start.elapsed();
    let idx = best_of_index(&c.choices, scorer).ok_or_else(|| GatewayError::Protocol("no choices".into()))?;
    Ok(CompletionExchange {
        request,
        response_text: c.choices[idx].clone(),
        prompt_tokens: c.prompt_tokens,
        completion_tokens: c.completion_tokens,
        latency,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    pub response_text: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

/// Serves scripted responses in order. Entries with a fingerprint only
/// answer a request with that fingerprint.
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Vec<ReplayEntry>,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<ReplayEntry>) -> Self {
        Self { entries, cursor: Mutex::new(0) }
    }

    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        serde_json::from_str(text).map(Self::new).map_err(|e| GatewayError::ReplayScript(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::ReplayScript(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn served(&self) -> usize {
        *self.cursor.lock().expect("replay cursor poisoned")
    }
}

impl Backend for ReplayBackend {
    fn send(&self, config: &ModelConfig, messages: &[Message]) -> Result<Completion, GatewayError> {
        let mut cur = self.cursor.lock().expect("replay cursor poisoned");
        let entry = self.entries.get(*cur).ok_or(GatewayError::ReplayExhausted { served: *cur })?;
        if let Some(expected) = &entry.fingerprint {
            let actual = request_fingerprint(&config.model_id, messages);
            if *expected != actual {
                return Err(GatewayError::ReplayMismatch { index: *cur, expected: expected.clone(), actual });
            }
        }
        *cur += 1;
        Ok(Completion {
            choices: vec![entry.response_text.clone()],
            prompt_tokens: entry.prompt_tokens,
            completion_tokens: entry.completion_tokens,
        })
    }
}

/// Wraps a backend and keeps every answered request as a replay entry.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<Vec<ReplayEntry>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn script(&self) -> Vec<ReplayEntry> {
        self.log.lock().expect("recording poisoned").clone()
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn send(&self, config: &ModelConfig, messages: &[Message]) -> Result<Completion, GatewayError> {
        let c = self.inner.send(config, messages)?;
        if let Some(first) = c.choices.first() {
            self.log.lock().expect("recording poisoned").push(ReplayEntry {
                fingerprint: Some(request_fingerprint(&config.model_id, messages)),
                response_text: first.clone(),
                prompt_tokens: c.prompt_tokens,
                completion_tokens: c.completion_tokens,
            });
        }
        Ok(c)
    }
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_base_url() -> String {
    "https://api.openai.com/v1".into()
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpSettings {
    /// Requests go to `<base_url>/chat/completions`.
    #[serde(default = "default_base_url")]
    pub base_url: String,
    /// Name of the variable holding the key; the key itself never lives in
    /// configuration.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            base_url: default_base_url(),
            api_key_env: default_key_env(),
            timeout_secs: default_timeout_secs(),
            attempts: default_attempts(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

pub struct HttpBackend {
    settings: HttpSettings,
    api_key: String,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend").field("settings", &self.settings).field("api_key", &"<redacted>").finish()
    }
}

/// Request body for a chat completion. Optional sampling fields are only
/// sent when configured.
pub fn request_body(config: &ModelConfig, messages: &[Message]) -> Value {
    let msgs: Vec<Value> = messages.iter().map(|m| json!({"role": m.role.as_str(), "content": m.text})).collect();
    let mut body = json!({"model": config.model_id, "messages": msgs, "temperature": config.temperature});
    let obj = body.as_object_mut().expect("object literal");
    if let Some(m) = config.max_tokens {
        obj.insert("max_tokens".into(), json!(m));
    }
    if let Some(p) = config.top_p {
        obj.insert("top_p".into(), json!(p));
    }
    if let Some(k) = config.top_k {
        obj.insert("top_k".into(), json!(k));
    }
    if config.best_of > 1 {
        obj.insert("n".into(), json!(config.best_of));
    }
    body
}

/// Parses a chat-completion response body. Missing usage falls back to the
/// byte heuristic.
pub fn parse_response(body: &str, messages: &[Message]) -> Result<Completion, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::Protocol(e.to_string()))?;
    let choices = v
        .get("choices")
        .and_then(Value::as_array)
        .ok_or_else(|| GatewayError::Protocol("missing `choices` array".into()))?;
    let texts = choices
        .iter()
        .map(|c| {
            c.pointer("/message/content")
                .or_else(|| c.get("text"))
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| GatewayError::Protocol("choice without text content".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if texts.is_empty() {
        return Err(GatewayError::Protocol("empty `choices` array".into()));
    }
    let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64);
    Ok(Completion {
        prompt_tokens: usage("prompt_tokens")
            .unwrap_or_else(|| messages.iter().map(|m| count_tokens(&m.text) as u64).sum()),
        completion_tokens: usage("completion_tokens")
            .unwrap_or_else(|| texts.iter().map(|t| count_tokens(t) as u64).sum()),
        choices: texts,
    })
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, GatewayError> {
        let api_key =
            std::env::var(&settings.api_key_env).map_err(|_| GatewayError::MissingApiKey(settings.api_key_env.clone()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { settings, api_key, agent })
    }

    fn redact(&self, s: String) -> String {
        if self.api_key.is_empty() {
            s
        } else {
            s.replace(&self.api_key, "<redacted>")
        }
    }

    fn attempt(&self, body: &Value, messages: &[Message]) -> Result<Completion, GatewayError> {
        let url = format!("{}/chat/completions", self.settings.base_url.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(GatewayError::Timeout),
            Err(e) => return Err(GatewayError::Transport(self.redact(e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(self.redact(e.to_string())))?;
        match status {
            200..=299 => parse_response(&text, messages),
            401 | 403 => Err(GatewayError::AuthFailure { status }),
            429 => Err(GatewayError::RateLimited { attempts: 1 }),
            _ => {
                let mut body = self.redact(text);
                body.truncate(body.char_indices().nth(500).map_or(body.len(), |(i, _)| i));
                Err(GatewayError::Http { status, body })
            }
        }
    }
}

impl Backend for HttpBackend {
    fn send(&self, config: &ModelConfig, messages: &[Message]) -> Result<Completion, GatewayError> {
        let body = request_body(config, messages);
        let attempts = self.settings.attempts.max(1);
        let mut delay = Duration::from_millis(self.settings.backoff_ms);
        let mut n = 0;
        loop {
            n += 1;
            match self.attempt(&body, messages) {
                Ok(c) => return Ok(c),
                Err(GatewayError::RateLimited { .. }) if n < attempts => {}
                Err(GatewayError::RateLimited { .. }) => return Err(GatewayError::RateLimited { attempts: n }),
                Err(e) if e.is_transient() && n < attempts => log::warn!("attempt {n} failed: {e}"),
                Err(e) => return Err(e),
            }
            thread::sleep(delay);
            delay *= 2;
        }
    }
}
