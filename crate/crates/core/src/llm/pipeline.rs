use std::collections::{BTreeMap, HashSet};

use super::parse::{parse_eval_response, parse_label_response, parse_rephrase_response};
use super::prompts::{build_eval_prompt, build_label_prompt, build_rephrase_prompt, reflection_prompt, PromptOptions};
use super::{
    CompletionParams, CompletionTransport, ParseError, PipelineError, PromptMessage, RawViolation, Stage, Suggestion,
};
use crate::condenser::{condense, subtree_condensed, CondenseOptions};
use crate::design_tree::{unnamed_groups, DesignDocument};
use crate::guidelines::GuidelineSet;

/// Everything the evaluation chain needs besides the transport.
#[derive(Debug, Clone, Copy)]
pub struct EvalRequest<'a> {
    pub doc: &'a DesignDocument,
    pub sets: &'a [GuidelineSet],
    pub history: &'a [PromptMessage],
    pub params: &'a CompletionParams,
    pub options: PromptOptions,
    pub condense: CondenseOptions,
}

impl<'a> EvalRequest<'a> {
    pub fn new(doc: &'a DesignDocument, sets: &'a [GuidelineSet], params: &'a CompletionParams) -> Self {
        EvalRequest {
            doc,
            sets,
            history: &[],
            params,
            options: PromptOptions::default(),
            condense: CondenseOptions::default(),
        }
    }

    pub fn with_history(mut self, history: &'a [PromptMessage]) -> Self {
        self.history = history;
        self
    }

    pub fn with_options(mut self, options: PromptOptions) -> Self {
        self.options = options;
        self
    }
}

fn call(
    transport: &dyn CompletionTransport,
    stage: Stage,
    messages: &[PromptMessage],
    params: &CompletionParams,
) -> Result<String, PipelineError> {
    transport.complete(messages, params).map_err(|source| PipelineError::Transport { stage, source })
}

fn parsed<T>(stage: Stage, r: Result<T, ParseError>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError::Parse { stage, source })
}

/// Runs evaluation then rephrasing. The rephrase call is skipped when there
/// is nothing to rephrase.
pub fn evaluate_ui(req: &EvalRequest<'_>, transport: &dyn CompletionTransport) -> Result<Vec<Suggestion>, PipelineError> {
    evaluate_ui_filtered(req, transport, |_| true)
}

/// Like [`evaluate_ui`], but violations rejected by `keep` are dropped before
/// rephrasing. Repeated identical violations are reported once.
pub fn evaluate_ui_filtered(
    req: &EvalRequest<'_>,
    transport: &dyn CompletionTransport,
    mut keep: impl FnMut(&RawViolation) -> bool,
) -> Result<Vec<Suggestion>, PipelineError> {
    req.params.validate().map_err(|e| PipelineError::InvalidRequest(e.to_string()))?;
    let ui = condense(req.doc, req.condense);
    let prompt = build_eval_prompt(&ui, req.sets, req.history, &req.options)?;
    let raw = call(transport, Stage::Evaluate, &prompt, req.params)?;
    let violations = parsed(Stage::Evaluate, parse_eval_response(&raw, req.doc, req.sets))?;

    let mut seen = HashSet::new();
    let violations: Vec<RawViolation> =
        violations.into_iter().filter(|v| seen.insert(v.suggestion_id()) && keep(v)).collect();
    if violations.is_empty() {
        return Ok(Vec::new());
    }

    let prompt = build_rephrase_prompt(&violations);
    let raw = call(transport, Stage::Rephrase, &prompt, req.params)?;
    let constructive = parsed(Stage::Rephrase, parse_rephrase_response(&raw, violations.len()))?;
    Ok(violations.into_iter().zip(constructive).map(|(v, c)| Suggestion::new(v, c)).collect())
}

/// Asks the model to reflect on a dismissed violation.
pub fn reflect_on(
    violation: &RawViolation,
    snapshots: &[String],
    transport: &dyn CompletionTransport,
    params: &CompletionParams,
) -> Result<String, PipelineError> {
    let raw = call(transport, Stage::Reflect, &reflection_prompt(violation, snapshots), params)?;
    let text = raw.trim();
    if text.is_empty() {
        return Err(PipelineError::Parse {
            stage: Stage::Reflect,
            source: ParseError::Unparseable { reason: "empty reflection".into(), raw },
        });
    }
    Ok(text.to_string())
}

/// Generates labels for groups with empty or placeholder names. Makes no call
/// when every group is already named.
pub fn generate_labels(
    doc: &DesignDocument,
    transport: &dyn CompletionTransport,
    params: &CompletionParams,
    condense_opts: CondenseOptions,
) -> Result<BTreeMap<String, String>, PipelineError> {
    let groups = unnamed_groups(doc);
    if groups.is_empty() {
        return Ok(BTreeMap::new());
    }
    let ids: Vec<String> = groups.iter().map(|g| g.id.clone()).collect();
    let subtrees: Vec<_> = ids
        .iter()
        .map(|id| subtree_condensed(doc, id, condense_opts).expect("group ids come from the document"))
        .collect();
    let raw = call(transport, Stage::Label, &build_label_prompt(&subtrees), params)?;
    parsed(Stage::Label, parse_label_response(&raw, &ids))
}
