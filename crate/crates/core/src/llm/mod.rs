//! Two-call LLM prompt chain: heuristic evaluation, then constructive
//! rephrasing, plus group-label generation and the prompt-ablation variants.

mod parse;
mod pipeline;
mod prompts;
mod transport;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use parse::{parse_eval_response, parse_label_response, parse_rephrase_response};
pub use pipeline::{evaluate_ui, evaluate_ui_filtered, generate_labels, reflect_on, EvalRequest};
pub use prompts::{
    ablation_prompt, build_eval_prompt, build_label_prompt, build_rephrase_prompt, feedback_exchange,
    prompt_tokens, reflection_prompt, PromptCondition, PromptOptions, CANNED_REFLECTION, COMMON_ERRORS, FEEDBACK_EXCHANGE_LEN,
};
pub use transport::{
    prompt_hash, CompletionTransport, HttpTransport, HttpTransportConfig, ScriptedTransport, SequenceTransport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptMessage {
    pub role: Role,
    pub content: String,
}

impl PromptMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        let content = content.into();
        debug_assert!(!content.is_empty(), "prompt messages must not be empty");
        PromptMessage { role, content }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    pub model: String,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams { temperature: 0.0, max_output_tokens: None, model: "gpt-4".into() }
    }
}

impl CompletionParams {
    pub fn with_model(model: impl Into<String>) -> Self {
        CompletionParams { model: model.into(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(TransportError::Config("temperature must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A node id cited by the evaluator, marked with whether it exists in the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRef {
    pub id: String,
    pub resolved: bool,
}

/// One violation as reported by the evaluation call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawViolation {
    pub guideline: String,
    /// False when the cited name matches none of the selected guidelines.
    pub guideline_resolved: bool,
    pub elements: Vec<ElementRef>,
    pub explanation: String,
}

impl RawViolation {
    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|e| e.id.as_str())
    }

    /// Stable id over guideline, cited ids (as a set) and normalized explanation.
    pub fn suggestion_id(&self) -> SuggestionId {
        let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let mut ids: Vec<&str> = self.node_ids().collect();
        ids.sort_unstable();
        ids.dedup();
        let mut hasher = Sha256::new();
        hasher.update(normalize(&self.guideline).as_bytes());
        hasher.update([0x1f]);
        hasher.update(ids.join("\u{1e}").as_bytes());
        hasher.update([0x1f]);
        hasher.update(normalize(&self.explanation).as_bytes());
        let digest = hasher.finalize();
        SuggestionId(format!("s-{}", &hex::encode(digest)[..16]))
    }

    /// The cited ids as a sorted set, used to spot the same issue under another guideline.
    pub fn node_key(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.node_ids().map(str::to_string).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuggestionId(pub String);

impl SuggestionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SuggestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Feedback phrased as expected standard, the gap to it, and how to close it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constructive {
    pub standard: String,
    pub gap: String,
    pub fix: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub id: SuggestionId,
    pub violation: RawViolation,
    pub constructive: Constructive,
}

impl Suggestion {
    pub fn new(violation: RawViolation, constructive: Constructive) -> Self {
        Suggestion { id: violation.suggestion_id(), violation, constructive }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("no scripted response for prompt {0}")]
    NoScript(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("transport configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unparseable response ({reason})")]
    Unparseable { reason: String, raw: String },
    #[error("expected {expected} items, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("item is missing its `{0}` segment")]
    MissingSegment(&'static str),
    #[error("no label for group `{0}`")]
    MissingLabel(String),
    #[error("label for unknown group `{0}`")]
    UnknownLabelId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Evaluate,
    Rephrase,
    Reflect,
    Label,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Evaluate => "evaluate",
            Stage::Rephrase => "rephrase",
            Stage::Reflect => "reflect",
            Stage::Label => "label",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("prompt needs {needed} tokens but the budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("{stage} call failed: {source}")]
    Transport { stage: Stage, source: TransportError },
    #[error("{stage} response rejected: {source}")]
    Parse { stage: Stage, source: ParseError },
    #[error("{0}")]
    InvalidRequest(String),
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Transport { stage, .. } | PipelineError::Parse { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
