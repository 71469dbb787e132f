//! Deterministic in-process backend for tests and offline smoke runs.

use crate::pipeline::{TaskKind, CLEAN_PROMPT, TAG_PROMPT};

use super::{Backend, CompletionRequest, CompletionResult, ProviderError, Usage};

/// Identity-plus-canned-tags backend.
///
/// Cleaning requests echo the document body unchanged. Tagging requests
/// return the body with every standalone four-digit number wrapped in a
/// `<date>` pair, which preserves content exactly and always produces
/// well-formed markup. Usage is computed with a fixed tokenizer of one
/// token per four characters, rounded up; latency is always zero so runs
/// are byte-reproducible.
#[derive(Debug, Default)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        Self
    }

    /// Recover the document body by stripping the known instruction
    /// prefix. Prompts that match neither template pass through whole.
    fn body_of(prompt: &str) -> &str {
        for template in [CLEAN_PROMPT, TAG_PROMPT] {
            if let Some(rest) = prompt
                .strip_prefix(template)
                .and_then(|r| r.strip_prefix("\n\n"))
            {
                return rest;
            }
        }
        prompt
    }

    fn fixed_tokens(text: &str) -> u64 {
        (text.chars().count() as u64).div_ceil(4)
    }
}

/// Wrap every standalone run of exactly four ASCII digits in `<date>`.
fn tag_years(body: &str) -> String {
    let chars: Vec<char> = body.chars().collect();
    let mut out = String::with_capacity(body.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let run: String = chars[i..j].iter().collect();
            if j - i == 4 {
                out.push_str("<date>");
                out.push_str(&run);
                out.push_str("</date>");
            } else {
                out.push_str(&run);
            }
            i = j;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

impl Backend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        let body = Self::body_of(&request.prompt);
        let text = match request.key.task {
            TaskKind::Clean => body.to_string(),
            TaskKind::Tag => tag_years(body),
        };
        Ok(CompletionResult {
            usage: Usage {
                prompt_tokens: Self::fixed_tokens(&request.prompt),
                completion_tokens: Self::fixed_tokens(&text),
            },
            latency_ms: 0,
            model: request.key.model.clone(),
            truncated: false,
            text,
        })
    }
}
