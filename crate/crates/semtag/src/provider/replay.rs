//! Record/replay fixture store.
//!
//! One fixture is two files in a flat directory, named after the
//! request key:
//!
//! ```text
//! <doc_id>.<task>.<model>.<run_index>.txt    completion text, verbatim
//! <doc_id>.<task>.<model>.<run_index>.json   usage, latency, prompt digest
//! ```
//!
//! Replays are bit-exact and side-effect free. The sidecar's prompt
//! digest guards against template or input drift since recording.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    prompt_digest, Backend, CompletionRequest, CompletionResult, ProviderError, RequestKey, Usage,
};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    prompt_tokens: u64,
    completion_tokens: u64,
    latency_ms: u64,
    prompt_sha256: String,
}

/// Directory of recorded completions keyed by (doc, task, model, run).
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn stem(key: &RequestKey) -> String {
        format!(
            "{}.{}.{}.{}",
            key.doc_id,
            key.task.label(),
            key.model,
            key.run_index
        )
    }

    fn text_path(&self, key: &RequestKey) -> PathBuf {
        self.dir.join(format!("{}.txt", Self::stem(key)))
    }

    fn sidecar_path(&self, key: &RequestKey) -> PathBuf {
        self.dir.join(format!("{}.json", Self::stem(key)))
    }

    /// Write one fixture: the completion text plus its sidecar metadata.
    pub fn record(
        &self,
        key: &RequestKey,
        result: &CompletionResult,
        prompt: &str,
    ) -> Result<(), ProviderError> {
        let fixture_err = |e: std::io::Error| ProviderError::Fixture {
            key: Self::stem(key),
            message: e.to_string(),
        };
        std::fs::create_dir_all(&self.dir).map_err(fixture_err)?;
        std::fs::write(self.text_path(key), &result.text).map_err(fixture_err)?;
        let sidecar = Sidecar {
            prompt_tokens: result.usage.prompt_tokens,
            completion_tokens: result.usage.completion_tokens,
            latency_ms: result.latency_ms,
            prompt_sha256: prompt_digest(prompt),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(self.sidecar_path(key), json).map_err(fixture_err)?;
        Ok(())
    }

    /// Load one fixture, verifying the recorded prompt digest.
    pub fn load(
        &self,
        key: &RequestKey,
        prompt: &str,
    ) -> Result<CompletionResult, ProviderError> {
        let text_path = self.text_path(key);
        if !text_path.exists() {
            return Err(ProviderError::MissingFixture(Self::stem(key)));
        }
        let read = |path: &Path| {
            std::fs::read_to_string(path).map_err(|e| ProviderError::Fixture {
                key: Self::stem(key),
                message: format!("{}: {e}", path.display()),
            })
        };
        let text = read(&text_path)?;
        let sidecar: Sidecar = serde_json::from_str(&read(&self.sidecar_path(key))?)
            .map_err(|e| ProviderError::Fixture {
                key: Self::stem(key),
                message: format!("sidecar parse: {e}"),
            })?;

        let actual = prompt_digest(prompt);
        if sidecar.prompt_sha256 != actual {
            return Err(ProviderError::PromptDigestMismatch {
                key: Self::stem(key),
                recorded: sidecar.prompt_sha256,
                actual,
            });
        }
        Ok(CompletionResult {
            text,
            usage: Usage {
                prompt_tokens: sidecar.prompt_tokens,
                completion_tokens: sidecar.completion_tokens,
            },
            latency_ms: sidecar.latency_ms,
            model: key.model.clone(),
            truncated: false,
        })
    }
}

/// Backend that serves recorded fixtures verbatim.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        Self { store }
    }

    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        Self::new(FixtureStore::new(dir))
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        self.store.load(&request.key, &request.prompt)
    }
}
