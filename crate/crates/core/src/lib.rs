//! Heuristic evaluation of static UI mockups.
//!
//! A design file is parsed into a [`design_tree::DesignDocument`], condensed
//! into a compact JSON form that fits an LLM context window, and evaluated
//! either by a two-call LLM chain ([`llm`]) or by deterministic layout rules
//! ([`rules`]). [`session`] runs repeated rounds where dismissed suggestions
//! are fed back to the model, and [`analysis`] holds the rating statistics.

pub mod analysis;
pub mod condenser;
pub mod design_tree;
pub mod guidelines;
pub mod llm;
pub mod report;
pub mod rules;
pub mod session;

pub use condenser::{condense, estimate_tokens, CondenseOptions, CondensedUiJson, DEFAULT_TOKEN_BUDGET};
pub use design_tree::{parse_document, Bounds, Color, DesignDocument, DesignError, DesignNode, NodeKind};
pub use guidelines::{builtin_sets, parse_custom, resolve_builtin, Guideline, GuidelineError, GuidelineSet};
pub use llm::{
    CompletionParams, CompletionTransport, PipelineError, PromptMessage, RawViolation, ScriptedTransport, Suggestion,
    SuggestionId,
};
pub use report::{render_report_markdown, Report};
pub use rules::{run_rules, RuleConfig, RuleFinding};
pub use session::{create_session, Engine, SessionError, SessionState};
