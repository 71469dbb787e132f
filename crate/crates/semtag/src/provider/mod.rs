//! Uniform interface to text-completion backends.
//!
//! Three backends sit behind the [`Backend`] trait: a live HTTP
//! chat-completion client with retries, a deterministic mock for tests
//! and smoke runs, and a record/replay store that makes whole pipeline
//! runs reproducible with zero network access.

mod live;
mod mock;
mod replay;

pub use live::LiveBackend;
pub use mock::MockBackend;
pub use replay::{FixtureStore, ReplayBackend};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pipeline::TaskKind;

/// One completion model plus its per-million-token pricing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// Currency per million prompt tokens.
    pub input_price: f64,
    /// Currency per million completion tokens.
    pub output_price: f64,
}

/// Request parameters for a single completion run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub run_index: u32,
}

impl Default for RequestParams {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            max_tokens: 8000,
            run_index: 1,
        }
    }
}

/// Token counts reported by a backend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Output of one completion call.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub model: String,
    /// Set when the backend stopped at the token limit; the partial
    /// output is still scored rather than treated as an error.
    pub truncated: bool,
}

/// Identity of one completion attempt, used to key replay fixtures.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequestKey {
    pub doc_id: String,
    pub task: TaskKind,
    pub model: String,
    pub run_index: u32,
}

/// Everything a backend needs to serve one completion.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub key: RequestKey,
    pub params: RequestParams,
    pub prompt: String,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("backend refusal: {0}")]
    Refusal(String),
    #[error("missing fixture for {0}")]
    MissingFixture(String),
    #[error("fixture prompt digest mismatch for {key}: recorded {recorded}, got {actual}")]
    PromptDigestMismatch {
        key: String,
        recorded: String,
        actual: String,
    },
    #[error("fixture error for {key}: {message}")]
    Fixture { key: String, message: String },
}

/// A completion backend. Implementations must tolerate concurrent
/// `complete` calls; every call is independent.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError>;
}

/// Cost of one request under a model's per-million-token pricing.
pub fn cost(usage: Usage, model: &ModelSpec) -> f64 {
    (usage.prompt_tokens as f64 * model.input_price
        + usage.completion_tokens as f64 * model.output_price)
        / 1_000_000.0
}

/// Hex SHA-256 of the full prompt, recorded with fixtures to detect
/// template or input drift between record and replay.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}
