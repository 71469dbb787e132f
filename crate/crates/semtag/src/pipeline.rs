//! Task orchestration: prompt construction, candidate scoring, and
//! deterministic best-output selection across the model roster.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::metrics::{bigram_profile, cpr, normalize};
use crate::provider::{
    cost, Backend, CompletionRequest, ModelSpec, ProviderError, RequestKey, RequestParams, Usage,
};
use crate::tagparser::{audit, n_tags, strip_tags, tokenize, twf, TagVocabulary};

/// Instruction sent ahead of the raw document text for the cleaning task.
pub const CLEAN_PROMPT: &str = "Include answer only: this text is scanned old UN resolution that can be in two columns, can you convert it into one column and correct any OCR errors, and remove printing hyphens and printing line breaks - if there is English and French texts, separate them, and keep the English first and French second";

/// Instruction sent ahead of the cleaned document text for the tagging
/// task.
pub const TAG_PROMPT: &str = "Include answer only: use xml tags to annotate this text, highlighting text within the ONLY these tags, while completely preserving the input text without any addition or omission:\n\n<location> <entity> <event> <organization> <date>";

/// Which of the two pipeline tasks a run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Clean,
    Tag,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::Clean => "clean",
            TaskKind::Tag => "tag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clean" => Some(TaskKind::Clean),
            "tag" => Some(TaskKind::Tag),
            _ => None,
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A pipeline task: the kind, its fixed instruction template, and (for
/// tagging) the tag vocabulary candidates are audited against.
#[derive(Debug, Clone)]
pub struct Task {
    pub kind: TaskKind,
    pub prompt_template: String,
    pub tag_vocabulary: Option<TagVocabulary>,
}

impl Task {
    pub fn clean() -> Self {
        Self {
            kind: TaskKind::Clean,
            prompt_template: CLEAN_PROMPT.to_string(),
            tag_vocabulary: None,
        }
    }

    pub fn tag(vocab: TagVocabulary) -> Self {
        Self {
            kind: TaskKind::Tag,
            prompt_template: TAG_PROMPT.to_string(),
            tag_vocabulary: Some(vocab),
        }
    }

    fn vocabulary(&self) -> TagVocabulary {
        self.tag_vocabulary.clone().unwrap_or_default()
    }
}

/// Scores attached to one candidate output. Cleaning populates only
/// `cpr`; tagging populates all three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub cpr: f64,
    pub twf: Option<f64>,
    pub n_tags: Option<u64>,
}

/// One (document, task, model, run) attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub doc_id: String,
    pub task: TaskKind,
    pub model: String,
    pub run_index: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Completion text; absent when the run failed.
    pub output: Option<String>,
    pub usage: Usage,
    pub latency_ms: u64,
    pub cost_usd: f64,
    pub metrics: Option<MetricSet>,
    pub selected: bool,
    pub failure: Option<String>,
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("document body is empty")]
    EmptyBody,
    #[error("model roster is empty")]
    EmptyRoster,
    #[error("all runs failed; no candidate to select")]
    AllRunsFailed,
}

/// Join the instruction template and the document body with one blank
/// line. Exposed for backends that need to recover the body.
pub fn build_prompt_parts(template: &str, body: &str) -> String {
    format!("{template}\n\n{body}")
}

/// Full prompt for a task over a document body.
pub fn build_prompt(task: &Task, body: &str) -> Result<String, PipelineError> {
    if body.is_empty() {
        return Err(PipelineError::EmptyBody);
    }
    Ok(build_prompt_parts(&task.prompt_template, body))
}

/// Score one candidate output against the task input.
///
/// Cleaning compares normalized input and output bigram profiles.
/// Tagging strips the vocabulary tags before the content comparison —
/// the tags themselves are requested additions, not content drift — and
/// audits the raw output for well-formedness and pair count.
pub fn score(task: &Task, input_text: &str, output_text: &str) -> MetricSet {
    match task.kind {
        TaskKind::Clean => {
            let input = bigram_profile(&normalize(input_text));
            let output = bigram_profile(&normalize(output_text));
            MetricSet {
                cpr: cpr(&input, &output).cpr,
                twf: None,
                n_tags: None,
            }
        }
        TaskKind::Tag => {
            let vocab = task.vocabulary();
            let stripped = strip_tags(output_text, &vocab);
            let input = bigram_profile(&normalize(input_text));
            let output = bigram_profile(&normalize(&stripped));
            let tag_audit = audit(&tokenize(output_text, &vocab));
            MetricSet {
                cpr: cpr(&input, &output).cpr,
                twf: Some(twf(&tag_audit)),
                n_tags: Some(n_tags(&tag_audit)),
            }
        }
    }
}

/// `Greater` when `a` should be preferred over `b`.
///
/// Cleaning ranks by CPR alone; tagging ranks lexicographically by
/// (CPR, TWF, nT). Ties break toward lower cost, then lexicographically
/// smaller model name, then smaller run index, so selection is fully
/// deterministic and independent of record order.
fn preference(a: &RunRecord, b: &RunRecord, task_kind: TaskKind) -> std::cmp::Ordering {
    let (ma, mb) = match (&a.metrics, &b.metrics) {
        (Some(ma), Some(mb)) => (ma, mb),
        (Some(_), None) => return std::cmp::Ordering::Greater,
        (None, Some(_)) => return std::cmp::Ordering::Less,
        (None, None) => return std::cmp::Ordering::Equal,
    };
    let mut ord = ma.cpr.total_cmp(&mb.cpr);
    if task_kind == TaskKind::Tag {
        ord = ord
            .then(
                ma.twf
                    .unwrap_or(0.0)
                    .total_cmp(&mb.twf.unwrap_or(0.0)),
            )
            .then(ma.n_tags.unwrap_or(0).cmp(&mb.n_tags.unwrap_or(0)));
    }
    ord.then_with(|| b.cost_usd.total_cmp(&a.cost_usd))
        .then_with(|| b.model.cmp(&a.model))
        .then_with(|| b.run_index.cmp(&a.run_index))
}

/// Index of the record the ensemble selects, ignoring failed runs.
pub fn select_best(records: &[RunRecord], task: &Task) -> Result<usize, PipelineError> {
    let mut best: Option<usize> = None;
    for (i, record) in records.iter().enumerate() {
        if record.metrics.is_none() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(j) => {
                if preference(record, &records[j], task.kind) == std::cmp::Ordering::Greater {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    best.ok_or(PipelineError::AllRunsFailed)
}

/// Currently selected record, if any run succeeded.
pub fn selected_index(records: &[RunRecord]) -> Option<usize> {
    records.iter().position(|r| r.selected)
}

/// Knobs for one task run. Defaults match the pipeline's standard
/// request parameters: 2 runs per model, temperature 1, 8000 max tokens,
/// 4 in-flight completions.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub runs_per_model: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            runs_per_model: 2,
            temperature: 1.0,
            max_tokens: 8000,
            parallelism: 4,
        }
    }
}

/// Run one task for one document across the whole roster.
///
/// Issues `|roster| × runs_per_model` completions with at most
/// `parallelism` in flight, scores each candidate, and marks exactly one
/// record selected (unless every run failed). Records come back in
/// roster-then-run order regardless of completion order, so output is
/// reproducible at any parallelism.
pub fn run_task(
    doc: &Document,
    task: &Task,
    roster: &[ModelSpec],
    options: &RunOptions,
    backend: &dyn Backend,
) -> Result<Vec<RunRecord>, PipelineError> {
    if roster.is_empty() {
        return Err(PipelineError::EmptyRoster);
    }
    let prompt = build_prompt(task, &doc.raw_text)?;

    let jobs: Vec<(&ModelSpec, u32)> = roster
        .iter()
        .flat_map(|m| (1..=options.runs_per_model).map(move |run| (m, run)))
        .collect();

    let results: Mutex<Vec<Option<Result<crate::provider::CompletionResult, ProviderError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next_job = AtomicUsize::new(0);
    let workers = options.parallelism.max(1).min(jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next_job.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let (model, run_index) = jobs[i];
                let request = CompletionRequest {
                    key: RequestKey {
                        doc_id: doc.doc_id.clone(),
                        task: task.kind,
                        model: model.name.clone(),
                        run_index,
                    },
                    params: RequestParams {
                        temperature: options.temperature,
                        max_tokens: options.max_tokens,
                        run_index,
                    },
                    prompt: prompt.clone(),
                };
                let outcome = backend.complete(&request);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let outcomes = results.into_inner().unwrap();
    let mut records: Vec<RunRecord> = jobs
        .iter()
        .zip(outcomes)
        .map(|((model, run_index), outcome)| {
            let base = RunRecord {
                doc_id: doc.doc_id.clone(),
                task: task.kind,
                model: model.name.clone(),
                run_index: *run_index,
                temperature: options.temperature,
                max_tokens: options.max_tokens,
                output: None,
                usage: Usage::default(),
                latency_ms: 0,
                cost_usd: 0.0,
                metrics: None,
                selected: false,
                failure: None,
                truncated: false,
            };
            match outcome.expect("every job slot is filled") {
                Ok(result) => RunRecord {
                    metrics: Some(score(task, &doc.raw_text, &result.text)),
                    cost_usd: cost(result.usage, model),
                    usage: result.usage,
                    latency_ms: result.latency_ms,
                    truncated: result.truncated,
                    output: Some(result.text),
                    ..base
                },
                Err(err) => RunRecord {
                    failure: Some(err.to_string()),
                    ..base
                },
            }
        })
        .collect();

    if let Ok(best) = select_best(&records, task) {
        records[best].selected = true;
    }
    Ok(records)
}
