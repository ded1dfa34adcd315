use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{PipelineError, PromptMessage, RawViolation};
use crate::condenser::{estimate_tokens, CondensedUiJson, DEFAULT_TOKEN_BUDGET};
use crate::guidelines::{render_guidelines_with, GuidelineSet};

/// Mistakes the evaluator is told to avoid. Edit `data/common_errors.txt` to change.
pub const COMMON_ERRORS: &str = include_str!("../../data/common_errors.txt");

/// Messages per dismissed-suggestion exchange: the earlier output, the
/// dismissal, and the model's reflection on it.
pub const FEEDBACK_EXCHANGE_LEN: usize = 3;

pub const CANNED_REFLECTION: &str = "I reported this without enough evidence in the UI. Before reporting a similar \
issue again, I will check that it is actually visible in the design and that it clearly conflicts with the cited \
guideline.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptOptions {
    pub token_budget: usize,
    /// List guideline bodies as well as names.
    pub guideline_bodies: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions { token_budget: DEFAULT_TOKEN_BUDGET, guideline_bodies: true }
    }
}

/// Estimated tokens of a whole prompt.
pub fn prompt_tokens(messages: &[PromptMessage]) -> usize {
    messages.iter().map(|m| estimate_tokens(&m.content).0).sum()
}

const EXPERT: &str = "You are an expert UI/UX designer";

const MOCKUP_NOTE: &str =
    "The screen is a static mockup, not an interactive prototype, so judge only what is visible in it.";

const JSON_DESCRIPTION: &str = "About this JSON: it is a tree that mirrors the layer structure of the mockup. \
Every node has a unique \"id\", an element \"type\" (GROUP, TEXT, IMAGE, ICON, BUTTON, INPUT, RECTANGLE or another \
type name) and \"bounds\" given as [x, y, width, height] in pixels, where x and y locate the top-left corner on the \
screen. A node may also have a designer-assigned \"name\", the \"text\" it displays, a \"font\" (family, size, \
weight), \"fill\" and \"background\" colors written as #RRGGBB or #RRGGBBAA, a \"stroke\" with color and weight, and \
an \"opacity\" when it is translucent. Groups list their members under \"children\".";

const NO_REPEATS: &str = "Report separate issues as separate items. Do not repeat the same issue for every element of \
the same type; cite all affected elements in one item instead.";

const CONSTRUCTIVE_PARTS: &str = "1. \"standard\": the expected standard set by the cited guideline.\n\
2. \"gap\": the gap between the current design and that standard.\n\
3. \"fix\": what needs to be done to close the gap.";

fn ui_section(ui: &CondensedUiJson) -> String {
    format!("Here is the JSON representation of the UI to evaluate:\n\n{}\n\n{}", ui.text, JSON_DESCRIPTION)
}

fn common_errors_section() -> String {
    format!("Avoid these common errors:\n{}", COMMON_ERRORS.trim_end())
}

fn eval_system(sets: &[GuidelineSet], opts: &PromptOptions, one_call: bool) -> String {
    let mut s = format!(
        "{EXPERT} performing a heuristic evaluation of a single UI screen. {MOCKUP_NOTE}\n\n\
Check the screen against the guidelines below and report every violation you find. Each violation must cite exactly \
one guideline by its name as written below, list the ids of the elements or groups involved, and explain what is \
wrong in one or two sentences. {NO_REPEATS}"
    );
    if one_call {
        s.push_str(
            "\n\nWrite each violation as constructive feedback for the designer in three parts:\n",
        );
        s.push_str(CONSTRUCTIVE_PARTS);
    }
    s.push_str("\n\nGuidelines:\n\n");
    s.push_str(render_guidelines_with(sets, opts.guideline_bodies).trim_end());
    s
}

const EVAL_FORMAT: &str = "Respond with only a JSON array and no other text. Each item must have the form \
{\"guideline\": \"<guideline name>\", \"elements\": [\"<id>\", ...], \"explanation\": \"<what is wrong>\"}. \
If there are no violations, respond with [].";

const ONE_CALL_FORMAT: &str = "Respond with only a JSON array and no other text. Each item must have the form \
{\"guideline\": \"<guideline name>\", \"elements\": [\"<id>\", ...], \"explanation\": \"<what is wrong>\", \
\"standard\": \"<expected standard>\", \"gap\": \"<how the design falls short>\", \"fix\": \"<how to close the \
gap>\"}. If there are no violations, respond with [].";

fn eval_user(ui: &CondensedUiJson, instruction: &str, format: &str) -> String {
    format!("{}\n\n{instruction}\n\n{format}\n\n{}", ui_section(ui), common_errors_section())
}

fn fit_history(
    system: PromptMessage,
    history: &[PromptMessage],
    user: PromptMessage,
    budget: usize,
) -> Result<Vec<PromptMessage>, PipelineError> {
    let base = prompt_tokens(std::slice::from_ref(&system)) + prompt_tokens(std::slice::from_ref(&user));
    if base > budget {
        return Err(PipelineError::BudgetExceeded { needed: base, budget });
    }
    // evict the oldest exchanges until the rest fits
    let mut start = 0;
    while start < history.len() && base + prompt_tokens(&history[start..]) > budget {
        start = (start + FEEDBACK_EXCHANGE_LEN).min(history.len());
    }
    let mut messages = Vec::with_capacity(history.len() - start + 2);
    messages.push(system);
    messages.extend_from_slice(&history[start..]);
    messages.push(user);
    Ok(messages)
}

/// Evaluation prompt: a system message with the instructions and guidelines,
/// any prior feedback exchanges, then the UI JSON with the output format.
///
/// Oldest history is dropped a whole exchange at a time until the estimated
/// size fits the token budget. Fails with `BudgetExceeded` when even the
/// prompt without history does not fit.
pub fn build_eval_prompt(
    ui: &CondensedUiJson,
    sets: &[GuidelineSet],
    history: &[PromptMessage],
    opts: &PromptOptions,
) -> Result<Vec<PromptMessage>, PipelineError> {
    let system = PromptMessage::system(eval_system(sets, opts, false));
    let user = PromptMessage::user(eval_user(ui, "Identify all violations of the guidelines in this UI.", EVAL_FORMAT));
    fit_history(system, history, user, opts.token_budget)
}

/// Second call: turns each violation into standard / gap / fix. The UI JSON
/// is not sent again.
pub fn build_rephrase_prompt(violations: &[RawViolation]) -> Vec<PromptMessage> {
    let system = format!(
        "You turn heuristic evaluation results into constructive feedback for a UI designer. For each violation, \
write three parts:\n{CONSTRUCTIVE_PARTS}\n\nRespond with only a JSON array and no other text. It must contain exactly \
one object per violation, in the same order as the violations, each of the form {{\"standard\": \"...\", \"gap\": \
\"...\", \"fix\": \"...\"}}."
    );
    let items: Vec<_> =
        violations.iter().map(|v| json!({"guideline": v.guideline, "explanation": v.explanation})).collect();
    let user = format!("Violations:\n\n{}", serde_json::to_string_pretty(&items).expect("json"));
    vec![PromptMessage::system(system), PromptMessage::user(user)]
}

/// Asks for a short label for each unnamed group, given its condensed subtree.
pub fn build_label_prompt(groups: &[CondensedUiJson]) -> Vec<PromptMessage> {
    let system = "You name groups of elements in a UI mockup. For each group, write a short descriptive label of two \
to six lowercase words based on what it contains, for example \"lyft event photo and logo\".\n\nRespond with only a \
JSON object and no other text, mapping every group id to its label: {\"<id>\": \"<label>\", ...}.";
    let body: Vec<&str> = groups.iter().map(|g| g.text.as_str()).collect();
    let user = format!("Groups:\n\n{}", body.join("\n\n"));
    vec![PromptMessage::system(system), PromptMessage::user(user)]
}

fn violation_item(violation: &RawViolation) -> serde_json::Value {
    let ids: Vec<&str> = violation.node_ids().collect();
    json!({"guideline": violation.guideline, "elements": ids, "explanation": violation.explanation})
}

fn dismissed_output(violation: &RawViolation, snapshots: &[String]) -> String {
    let mut s = serde_json::to_string(&[violation_item(violation)]).expect("json");
    if !snapshots.is_empty() {
        s.push_str("\n\nReferenced elements at the time:\n");
        s.push_str(&snapshots.join("\n"));
    }
    s
}

const DISMISSAL_NOTE: &str = "The designer marked the violation above as incorrect or unhelpful, so do not report it \
again. Briefly reflect on why it was wrong for this UI and what you should check before reporting a similar issue.";

/// Standalone request for the reflection on one dismissed violation.
/// `snapshots` are condensed JSON strings of the nodes it referenced.
pub fn reflection_prompt(violation: &RawViolation, snapshots: &[String]) -> Vec<PromptMessage> {
    vec![
        PromptMessage::system(format!(
            "{EXPERT} reviewing your own heuristic evaluation of a UI screen. {MOCKUP_NOTE}"
        )),
        PromptMessage::assistant(dismissed_output(violation, snapshots)),
        PromptMessage::user(DISMISSAL_NOTE),
    ]
}

/// The three messages a dismissal contributes to later evaluation prompts.
pub fn feedback_exchange(
    violation: &RawViolation,
    snapshots: &[String],
    reflection: &str,
) -> [PromptMessage; FEEDBACK_EXCHANGE_LEN] {
    let reflection = if reflection.trim().is_empty() { CANNED_REFLECTION } else { reflection };
    [
        PromptMessage::assistant(dismissed_output(violation, snapshots)),
        PromptMessage::user(DISMISSAL_NOTE),
        PromptMessage::assistant(reflection),
    ]
}

/// Prompt variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptCondition {
    Complete,
    OneCall,
    NoHeuristics,
    GeneralFeedback,
}

impl PromptCondition {
    pub const ALL: [PromptCondition; 4] =
        [PromptCondition::Complete, PromptCondition::OneCall, PromptCondition::NoHeuristics, PromptCondition::GeneralFeedback];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptCondition::Complete => "complete",
            PromptCondition::OneCall => "one-call",
            PromptCondition::NoHeuristics => "no-heuristics",
            PromptCondition::GeneralFeedback => "general-feedback",
        }
    }

    pub fn parse(s: &str) -> Option<PromptCondition> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complete" => Some(PromptCondition::Complete),
            "one-call" | "onecall" | "one_call" => Some(PromptCondition::OneCall),
            "no-heuristics" | "no_heuristics" => Some(PromptCondition::NoHeuristics),
            "general-feedback" | "general_feedback" | "general" => Some(PromptCondition::GeneralFeedback),
            _ => None,
        }
    }
}

impl fmt::Display for PromptCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn issue_focus(sets: &[GuidelineSet]) -> String {
    let mut focus: Vec<&str> = Vec::new();
    for set in sets {
        let f = match set.id.as_str() {
            "nielsen" => "usability issues",
            "crowdcrit" => "visual design issues",
            "semantic" => "semantic group issues",
            _ => "design issues",
        };
        if !focus.contains(&f) {
            focus.push(f);
        }
    }
    match focus.as_slice() {
        [] => "design issues".to_string(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Evaluation prompt for one ablation condition. `Complete` is the normal
/// evaluation prompt without history.
pub fn ablation_prompt(
    condition: PromptCondition,
    ui: &CondensedUiJson,
    sets: &[GuidelineSet],
    opts: &PromptOptions,
) -> Result<Vec<PromptMessage>, PipelineError> {
    let (system, user) = match condition {
        PromptCondition::Complete => return build_eval_prompt(ui, sets, &[], opts),
        PromptCondition::OneCall => (
            eval_system(sets, opts, true),
            eval_user(ui, "Identify all violations of the guidelines in this UI.", ONE_CALL_FORMAT),
        ),
        PromptCondition::NoHeuristics => {
            let focus = issue_focus(sets);
            (
                format!(
                    "{EXPERT} reviewing a single UI screen. {MOCKUP_NOTE}\n\nLook for {focus} in the screen and \
report every one you find. Each issue must list the ids of the elements or groups involved and explain what is wrong \
in one or two sentences. {NO_REPEATS}"
                ),
                eval_user(
                    ui,
                    &format!("Identify all {focus} in this UI."),
                    "Respond with only a JSON array and no other text. Each item must have the form {\"issue\": \
\"<short name of the issue>\", \"elements\": [\"<id>\", ...], \"explanation\": \"<what is wrong>\"}. If there are no \
issues, respond with [].",
                ),
            )
        }
        PromptCondition::GeneralFeedback => (
            format!(
                "{EXPERT} reviewing a single UI screen. {MOCKUP_NOTE}\n\nGive feedback on the design of the screen. \
Each piece of feedback must list the ids of the elements or groups involved and explain the point in one or two \
sentences. {NO_REPEATS}"
            ),
            eval_user(
                ui,
                "Give all of your feedback on this UI.",
                "Respond with only a JSON array and no other text. Each item must have the form {\"elements\": \
[\"<id>\", ...], \"explanation\": \"<the feedback>\"}. If you have no feedback, respond with [].",
            ),
        ),
    };
    fit_history(PromptMessage::system(system), &[], PromptMessage::user(user), opts.token_budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condenser::{condense, CondenseOptions};
    use crate::design_tree::{Bounds, DesignDocument, DesignNode, NodeKind, SourceMeta};
    use crate::guidelines::builtin_sets;
    use crate::llm::{ElementRef, Role};

    fn ui() -> CondensedUiJson {
        let root = DesignNode::new("root", NodeKind::Group, Bounds::new(0.0, 0.0, 375.0, 812.0))
            .with_children(vec![DesignNode::new("t1", NodeKind::Text, Bounds::new(16.0, 40.0, 200.0, 24.0))]);
        condense(&DesignDocument::new(root, None, SourceMeta::default()).unwrap(), CondenseOptions::default())
    }

    fn violation() -> RawViolation {
        RawViolation {
            guideline: "Aesthetic and Minimalist Design".into(),
            guideline_resolved: true,
            elements: vec![ElementRef { id: "t1".into(), resolved: true }],
            explanation: "Too much text.".into(),
        }
    }

    #[test]
    fn eval_prompt_layout() {
        let sets = builtin_sets();
        let p = build_eval_prompt(&ui(), sets, &[], &PromptOptions::default()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].role, Role::System);
        for set in sets {
            for g in &set.guidelines {
                assert!(p[0].content.contains(&g.name));
            }
        }
        assert!(p[1].content.contains(&ui().text));
        assert!(p[1].content.contains("status bar"));
    }

    #[test]
    fn history_evicted_in_whole_exchanges() {
        let sets = &builtin_sets()[..1];
        let exchange = feedback_exchange(&violation(), &[], "x".repeat(400).as_str());
        let history: Vec<PromptMessage> = (0..5).flat_map(|_| exchange.clone()).collect();
        let base = build_eval_prompt(&ui(), sets, &[], &PromptOptions::default()).unwrap();
        let base_tokens = prompt_tokens(&base);
        let per = prompt_tokens(&exchange);
        let opts = PromptOptions { token_budget: base_tokens + 2 * per + 1, ..Default::default() };
        let p = build_eval_prompt(&ui(), sets, &history, &opts).unwrap();
        assert_eq!(p.len(), 2 + 2 * FEEDBACK_EXCHANGE_LEN);
        assert!(prompt_tokens(&p) <= opts.token_budget);
        let tiny = PromptOptions { token_budget: 10, ..Default::default() };
        assert!(matches!(build_eval_prompt(&ui(), sets, &[], &tiny), Err(PipelineError::BudgetExceeded { .. })));
    }

    #[test]
    fn rephrase_prompt_omits_ui() {
        let p = build_rephrase_prompt(&[violation()]);
        assert!(!p.iter().any(|m| m.content.contains("\"bounds\"")));
        assert!(p[1].content.contains("Too much text."));
    }

    #[test]
    fn ablation_variants() {
        let sets = builtin_sets();
        let opts = PromptOptions::default();
        let no_h = ablation_prompt(PromptCondition::NoHeuristics, &ui(), sets, &opts).unwrap();
        let text: String = no_h.iter().map(|m| m.content.as_str()).collect();
        for set in sets {
            for g in &set.guidelines {
                assert!(!text.contains(&g.name), "{}", g.name);
            }
        }
        assert!(text.contains("usability issues, visual design issues and semantic group issues"));
        let general = ablation_prompt(PromptCondition::GeneralFeedback, &ui(), sets, &opts).unwrap();
        let text: String = general.iter().map(|m| m.content.to_lowercase()).collect();
        assert!(!text.contains("guideline") && !text.contains("violation") && text.contains("feedback"));
        let one = ablation_prompt(PromptCondition::OneCall, &ui(), sets, &opts).unwrap();
        assert!(one[1].content.contains("\"standard\"") && one[0].content.contains("\"gap\""));
        assert_eq!(PromptCondition::parse("general"), Some(PromptCondition::GeneralFeedback));
    }
}
