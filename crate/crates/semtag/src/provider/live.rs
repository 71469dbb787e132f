//! Live HTTP chat-completion backend.
//!
//! Speaks the common chat-completion wire shape: a POST with model,
//! messages, temperature and max_tokens; a JSON response carrying
//! `choices[0].message.content`, `usage` counts and a finish reason.
//! Transient transport failures and 429/5xx responses are retried with
//! exponential backoff; truncation (`finish_reason == "length"`) is not
//! an error — the partial output comes back flagged so it can still be
//! scored.

use std::time::{Duration, Instant};

use serde_json::{json, Value};
use ureq::Agent;

use super::{Backend, CompletionRequest, CompletionResult, ProviderError, Usage};

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "SEMTAG_API_KEY";

const DEFAULT_MAX_RETRIES: u32 = 3;
const DEFAULT_INITIAL_BACKOFF: Duration = Duration::from_secs(1);
const REQUEST_TIMEOUT: Duration = Duration::from_secs(300);

pub struct LiveBackend {
    endpoint: String,
    api_key: String,
    agent: Agent,
    max_retries: u32,
    initial_backoff: Duration,
}

impl LiveBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        let config = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(REQUEST_TIMEOUT))
            .build();
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            agent: config.into(),
            max_retries: DEFAULT_MAX_RETRIES,
            initial_backoff: DEFAULT_INITIAL_BACKOFF,
        }
    }

    /// Override the retry schedule (used by tests to avoid real sleeps).
    pub fn with_retry(mut self, max_retries: u32, initial_backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.initial_backoff = initial_backoff;
        self
    }

    fn send_once(&self, request: &CompletionRequest) -> Result<Value, Attempt> {
        let payload = json!({
            "model": request.key.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        });
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&payload)
            .map_err(|e| Attempt::Transient(e.to_string()))?;

        let status = response.status().as_u16();
        let body: Value = response
            .into_body()
            .read_json()
            .unwrap_or_else(|e| json!({"unparsed": e.to_string()}));

        match status {
            200..=299 => Ok(body),
            401 | 403 => Err(Attempt::Fatal(ProviderError::Auth(format!(
                "HTTP {status}: {}",
                error_message(&body)
            )))),
            429 | 500..=599 => Err(Attempt::Transient(format!(
                "HTTP {status}: {}",
                error_message(&body)
            ))),
            _ => Err(Attempt::Fatal(ProviderError::Refusal(format!(
                "HTTP {status}: {}",
                error_message(&body)
            )))),
        }
    }
}

enum Attempt {
    /// Worth retrying: connection failures, timeouts, 429, 5xx.
    Transient(String),
    /// Not worth retrying: auth failures, 4xx refusals.
    Fatal(ProviderError),
}

fn error_message(body: &Value) -> String {
    body.pointer("/error/message")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .unwrap_or_else(|| body.to_string())
}

fn parse_completion(body: &Value, model: &str, latency_ms: u64) -> Result<CompletionResult, ProviderError> {
    let choice = body
        .pointer("/choices/0")
        .ok_or_else(|| ProviderError::Refusal(format!("no choices in response: {body}")))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| {
            let reason = choice
                .pointer("/message/refusal")
                .and_then(Value::as_str)
                .unwrap_or("response carries no message content");
            ProviderError::Refusal(reason.to_string())
        })?;
    let truncated = choice
        .pointer("/finish_reason")
        .and_then(Value::as_str)
        .map(|r| r == "length")
        .unwrap_or(false);
    let usage = Usage {
        prompt_tokens: body
            .pointer("/usage/prompt_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
        completion_tokens: body
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
    };
    Ok(CompletionResult {
        text: text.to_string(),
        usage,
        latency_ms,
        model: model.to_string(),
        truncated,
    })
}

impl Backend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        let started = Instant::now();
        let mut backoff = self.initial_backoff;
        let mut last_transient = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.send_once(request) {
                Ok(body) => {
                    let latency_ms = started.elapsed().as_millis() as u64;
                    return parse_completion(&body, &request.key.model, latency_ms);
                }
                Err(Attempt::Fatal(err)) => return Err(err),
                Err(Attempt::Transient(msg)) => last_transient = msg,
            }
        }
        Err(ProviderError::Transport(format!(
            "{} attempts failed, last: {last_transient}",
            self.max_retries + 1
        )))
    }
}
