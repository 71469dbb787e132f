//! Batch pipeline for cleaning OCR-noisy legacy documents and applying
//! semantic XML tags with an ensemble of completion models.
//!
//! Every candidate output is scored for content preservation (character
//! bigram comparison) and, for the tagging task, tag well-formedness and
//! tag count. The best candidate per document is selected
//! deterministically, persisted, and recorded in an append-only run
//! ledger from which per-model comparison reports can be regenerated.
//!
//! Modules:
//! - [`metrics`] — content preservation ratio over character bigrams
//! - [`tagparser`] — tag tokenization, stack audit, TWF / tag counts
//! - [`provider`] — completion backends (live HTTP, mock, replay) and cost
//! - [`pipeline`] — task orchestration, scoring, best-output selection
//! - [`corpus`] — document ingest, output persistence, ledger, reports
//! - [`config`] — run configuration with paper-default parameters
//! - [`cli`] — command implementations behind the `semtag` binary

pub mod cli;
pub mod config;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod provider;
pub mod tagparser;

pub use config::Config;
pub use metrics::{bigram_profile, cpr, normalize, BigramProfile, PreservationScore};
pub use pipeline::{select_best, Task, TaskKind};
pub use tagparser::{audit, n_tags, strip_tags, tokenize, twf, TagAudit, TagVocabulary};
