//! Iterative evaluation rounds with dismissal feedback and persistence.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::condenser::{condense, subtree_condensed, CondenseOptions, CondensedUiJson, DEFAULT_TOKEN_BUDGET};
use crate::design_tree::DesignDocument;
use crate::guidelines::GuidelineSet;
use crate::llm::{
    build_eval_prompt, evaluate_ui_filtered, feedback_exchange, reflect_on, CompletionParams, CompletionTransport,
    EvalRequest, PipelineError, PromptMessage, PromptOptions, RawViolation, Stage, Suggestion, SuggestionId,
    TransportError, CANNED_REFLECTION,
};
use crate::rules::{finding_to_suggestion, run_rules, RuleConfig};

pub const SESSION_FORMAT: &str = "heurex-session/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Llm,
    Rules,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Llm => "llm",
            Engine::Rules => "rules",
        }
    }

    pub fn parse(s: &str) -> Option<Engine> {
        match s.trim().to_ascii_lowercase().as_str() {
            "llm" => Some(Engine::Llm),
            "rules" => Some(Engine::Rules),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionStatus {
    Active,
    Dismissed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based.
    pub number: u32,
    pub ui_snapshot: CondensedUiJson,
    pub suggestions: Vec<Suggestion>,
    pub status: BTreeMap<SuggestionId, SuggestionStatus>,
}

impl Round {
    pub fn active(&self) -> impl Iterator<Item = &Suggestion> {
        self.suggestions.iter().filter(|s| self.status.get(&s.id) == Some(&SuggestionStatus::Active))
    }

    pub fn find(&self, id: &SuggestionId) -> Option<&Suggestion> {
        self.suggestions.iter().find(|s| &s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DismissalRecord {
    pub suggestion_id: SuggestionId,
    pub violation: RawViolation,
    /// Condensed JSON of each referenced node that still existed at dismissal.
    pub snapshots: Vec<String>,
    /// Referenced ids that were not in the document at dismissal time.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_nodes: Vec<String>,
    pub round: u32,
    /// Caller-supplied, seconds since the Unix epoch.
    pub timestamp: u64,
    /// The model's reflection; filled in before the next round runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<String>,
}

impl DismissalRecord {
    /// True when some referenced node was gone at dismissal time.
    pub fn has_missing_nodes(&self) -> bool {
        !self.missing_nodes.is_empty()
    }

    pub fn exchange(&self) -> [PromptMessage; 3] {
        feedback_exchange(&self.violation, &self.snapshots, self.reflection.as_deref().unwrap_or(CANNED_REFLECTION))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("select at least one guideline set")]
    NoGuidelines,
    #[error("token budget must be positive")]
    InvalidBudget,
    #[error("invalid rule config: {0}")]
    InvalidConfig(String),
    #[error("unknown suggestion `{0}`")]
    UnknownSuggestion(String),
    #[error("suggestion `{0}` is already dismissed")]
    AlreadyDismissed(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("unsupported session format `{found}`")]
    VersionMismatch { found: String },
    #[error("corrupt session state: {0}")]
    CorruptState(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub document: DesignDocument,
    pub sets: Vec<GuidelineSet>,
    pub engine: Engine,
    pub budget: usize,
    pub params: CompletionParams,
    #[serde(default)]
    pub rule_config: RuleConfig,
    /// Also hide new suggestions that cite exactly the nodes of a dismissed
    /// one under a different guideline.
    #[serde(default)]
    pub suppress_guideline_swaps: bool,
    pub rounds: Vec<Round>,
    pub dismissals: Vec<DismissalRecord>,
}

#[derive(Serialize)]
struct SavedRef<'a> {
    format: &'static str,
    session: &'a SessionState,
}

/// Creates an empty session. `budget` defaults to [`DEFAULT_TOKEN_BUDGET`].
pub fn create_session(
    session_id: impl Into<String>,
    document: DesignDocument,
    sets: Vec<GuidelineSet>,
    engine: Engine,
    budget: Option<usize>,
) -> Result<SessionState, SessionError> {
    if sets.is_empty() {
        return Err(SessionError::NoGuidelines);
    }
    let budget = budget.unwrap_or(DEFAULT_TOKEN_BUDGET);
    if budget == 0 {
        return Err(SessionError::InvalidBudget);
    }
    Ok(SessionState {
        session_id: session_id.into(),
        document,
        sets,
        engine,
        budget,
        params: CompletionParams::default(),
        rule_config: RuleConfig::default(),
        suppress_guideline_swaps: false,
        rounds: Vec::new(),
        dismissals: Vec::new(),
    })
}

fn prompt_options(budget: usize) -> PromptOptions {
    PromptOptions { token_budget: budget, ..PromptOptions::default() }
}

/// Tokens left for history once the base evaluation prompt for `doc` is counted.
fn history_allowance(doc: &DesignDocument, sets: &[GuidelineSet], budget: usize) -> usize {
    let ui = condense(doc, CondenseOptions::default());
    match build_eval_prompt(&ui, sets, &[], &prompt_options(budget)) {
        Ok(base) => budget.saturating_sub(crate::llm::prompt_tokens(&base)),
        Err(_) => 0,
    }
}

/// Newest-first selection of dismissal exchanges totalling at most
/// `allowance` tokens, returned oldest first. Stops at the first record that
/// does not fit, so only the oldest records are evicted.
fn retained_history(dismissals: &[DismissalRecord], allowance: usize) -> Vec<PromptMessage> {
    let mut kept: Vec<[PromptMessage; 3]> = Vec::new();
    let mut used = 0;
    for record in dismissals.iter().rev() {
        let exchange = record.exchange();
        let cost = crate::llm::prompt_tokens(&exchange);
        if used + cost > allowance {
            break;
        }
        used += cost;
        kept.push(exchange);
    }
    kept.into_iter().rev().flatten().collect()
}

impl SessionState {
    pub fn latest_round(&self) -> Option<&Round> {
        self.rounds.last()
    }

    pub fn round(&self, number: u32) -> Option<&Round> {
        self.rounds.iter().find(|r| r.number == number)
    }

    pub fn is_dismissed(&self, id: &SuggestionId) -> bool {
        self.dismissals.iter().any(|d| &d.suggestion_id == id)
    }

    /// Marks a suggestion dismissed and records it, with snapshots of the
    /// nodes it referenced in the current document.
    pub fn dismiss(&mut self, id: &SuggestionId, timestamp: u64) -> Result<&DismissalRecord, SessionError> {
        if self.is_dismissed(id) {
            return Err(SessionError::AlreadyDismissed(id.to_string()));
        }
        let round = self
            .rounds
            .iter_mut()
            .rev()
            .find(|r| r.status.contains_key(id))
            .ok_or_else(|| SessionError::UnknownSuggestion(id.to_string()))?;
        let violation = round.find(id).expect("status keys match suggestions").violation.clone();
        round.status.insert(id.clone(), SuggestionStatus::Dismissed);
        let number = round.number;

        let mut snapshots = Vec::new();
        let mut missing_nodes = Vec::new();
        let mut seen = HashSet::new();
        for node in violation.node_ids().filter(|n| seen.insert(*n)) {
            match subtree_condensed(&self.document, node, CondenseOptions::default()) {
                Ok(c) => snapshots.push(c.text),
                Err(_) => missing_nodes.push(node.to_string()),
            }
        }
        self.dismissals.push(DismissalRecord {
            suggestion_id: id.clone(),
            violation,
            snapshots,
            missing_nodes,
            round: number,
            timestamp,
            reflection: None,
        });
        Ok(self.dismissals.last().expect("just pushed"))
    }

    /// Feedback exchanges for the next evaluation prompt, newest records kept
    /// first, within what the budget leaves after the base prompt.
    pub fn history_for_next_round(&self) -> Vec<PromptMessage> {
        retained_history(&self.dismissals, history_allowance(&self.document, &self.sets, self.budget))
    }

    fn suppressed(&self) -> (HashSet<SuggestionId>, Vec<(Vec<String>, String)>) {
        let ids = self.dismissals.iter().map(|d| d.suggestion_id.clone()).collect();
        let keys = self.dismissals.iter().map(|d| (d.violation.node_key(), d.violation.guideline.clone())).collect();
        (ids, keys)
    }

    fn keeps(&self, ids: &HashSet<SuggestionId>, keys: &[(Vec<String>, String)], v: &RawViolation) -> bool {
        if ids.contains(&v.suggestion_id()) {
            return false;
        }
        if self.suppress_guideline_swaps {
            let key = v.node_key();
            if !key.is_empty() && keys.iter().any(|(k, g)| *k == key && *g != v.guideline) {
                return false;
            }
        }
        true
    }

    /// Runs one evaluation round, optionally on an updated document. Pending
    /// reflections are requested first. Nothing changes if any step fails.
    pub fn run_round(
        &mut self,
        updated: Option<DesignDocument>,
        transport: &dyn CompletionTransport,
    ) -> Result<&Round, SessionError> {
        self.rule_config.validate().map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        let document = updated.unwrap_or_else(|| self.document.clone());
        let (ids, keys) = self.suppressed();

        let mut dismissals = self.dismissals.clone();
        let suggestions = match self.engine {
            Engine::Rules => run_rules(&document, &self.sets, &self.rule_config)
                .iter()
                .map(|f| finding_to_suggestion(f, &document))
                .filter(|s| self.keeps(&ids, &keys, &s.violation))
                .collect(),
            Engine::Llm => {
                for record in dismissals.iter_mut().filter(|d| d.reflection.is_none()) {
                    let text = match reflect_on(&record.violation, &record.snapshots, transport, &self.params) {
                        Ok(text) => text,
                        Err(PipelineError::Transport { source: TransportError::NoScript(_), .. }) => {
                            CANNED_REFLECTION.to_string()
                        }
                        Err(e) => return Err(e.into()),
                    };
                    record.reflection = Some(text);
                }
                let history = retained_history(&dismissals, history_allowance(&document, &self.sets, self.budget));
                let req = EvalRequest::new(&document, &self.sets, &self.params)
                    .with_history(&history)
                    .with_options(prompt_options(self.budget));
                let mut seen = HashSet::new();
                evaluate_ui_filtered(&req, transport, |v| self.keeps(&ids, &keys, v) && seen.insert(v.suggestion_id()))?
            }
        };
        // dedupe: rule findings can coincide once phrased
        let mut seen = HashSet::new();
        let suggestions: Vec<Suggestion> = suggestions.into_iter().filter(|s| seen.insert(s.id.clone())).collect();

        let number = self.rounds.last().map_or(1, |r| r.number + 1);
        let status = suggestions.iter().map(|s| (s.id.clone(), SuggestionStatus::Active)).collect();
        let round = Round { number, ui_snapshot: condense(&document, CondenseOptions::default()), suggestions, status };
        self.document = document;
        self.dismissals = dismissals;
        self.rounds.push(round);
        Ok(self.rounds.last().expect("just pushed"))
    }

    /// Serializes the full state in the versioned session format.
    pub fn save(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&SavedRef { format: SESSION_FORMAT, session: self }).expect("session serializes")
    }

    pub fn load(bytes: &[u8]) -> Result<SessionState, SessionError> {
        let corrupt = |e: &dyn std::fmt::Display| SessionError::CorruptState(e.to_string());
        let mut value: Value = serde_json::from_slice(bytes).map_err(|e| corrupt(&e))?;
        let format = value
            .get("format")
            .and_then(Value::as_str)
            .ok_or_else(|| SessionError::CorruptState("missing format tag".into()))?;
        if format != SESSION_FORMAT {
            return Err(SessionError::VersionMismatch { found: format.to_string() });
        }
        let session = value
            .get_mut("session")
            .map(Value::take)
            .ok_or_else(|| SessionError::CorruptState("missing session".into()))?;
        let state: SessionState = serde_json::from_value(session).map_err(|e| corrupt(&e))?;
        state.check().map_err(SessionError::CorruptState)?;
        Ok(state)
    }

    fn check(&self) -> Result<(), String> {
        if self.sets.is_empty() {
            return Err("no guideline sets".into());
        }
        for pair in self.rounds.windows(2) {
            if pair[1].number <= pair[0].number {
                return Err("round numbers are not increasing".into());
            }
        }
        let mut seen = HashSet::new();
        for d in &self.dismissals {
            if !seen.insert(&d.suggestion_id) {
                return Err(format!("suggestion `{}` dismissed twice", d.suggestion_id));
            }
            let dismissed = self
                .rounds
                .iter()
                .any(|r| r.status.get(&d.suggestion_id) == Some(&SuggestionStatus::Dismissed));
            if !dismissed {
                return Err(format!("dismissal of unknown suggestion `{}`", d.suggestion_id));
            }
        }
        Ok(())
    }
}

/// Stage of a session error, when it came from the LLM chain.
pub fn error_stage(e: &SessionError) -> Option<Stage> {
    match e {
        SessionError::Pipeline(p) => p.stage(),
        _ => None,
    }
}
