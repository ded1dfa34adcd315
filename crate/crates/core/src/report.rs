//! Round reports for display: suggestions with the geometry of the nodes they cite.

use serde::{Deserialize, Serialize};

use crate::condenser::CondensedUiJson;
use crate::llm::SuggestionId;
use crate::session::{Engine, Round, SessionState, SuggestionStatus};

/// A cited node with its bounds as they were in the round's snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRef {
    pub id: String,
    pub name: String,
    /// `[x, y, width, height]`
    pub bounds: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSuggestion {
    pub id: SuggestionId,
    pub status: SuggestionStatus,
    pub guideline: String,
    pub guideline_resolved: bool,
    pub explanation: String,
    pub standard: String,
    pub gap: String,
    pub fix: String,
    pub nodes: Vec<NodeRef>,
    /// Cited ids that are not in the snapshot.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub session_id: String,
    pub round: u32,
    pub engine: Engine,
    pub suggestions: Vec<ReportSuggestion>,
}

impl Report {
    pub fn from_round(session_id: &str, engine: Engine, round: &Round) -> Report {
        let suggestions = round
            .suggestions
            .iter()
            .map(|s| {
                let (nodes, unresolved_refs) = node_refs(&round.ui_snapshot, s.violation.node_ids());
                ReportSuggestion {
                    id: s.id.clone(),
                    status: round.status.get(&s.id).copied().unwrap_or(SuggestionStatus::Active),
                    guideline: s.violation.guideline.clone(),
                    guideline_resolved: s.violation.guideline_resolved,
                    explanation: s.violation.explanation.clone(),
                    standard: s.constructive.standard.clone(),
                    gap: s.constructive.gap.clone(),
                    fix: s.constructive.fix.clone(),
                    nodes,
                    unresolved_refs,
                }
            })
            .collect();
        Report { session_id: session_id.to_string(), round: round.number, engine, suggestions }
    }

    /// Report for a round of `session`, or `None` if there is no such round.
    pub fn for_round(session: &SessionState, number: u32) -> Option<Report> {
        session.round(number).map(|r| Report::from_round(&session.session_id, session.engine, r))
    }

    pub fn latest(session: &SessionState) -> Option<Report> {
        session.latest_round().map(|r| Report::from_round(&session.session_id, session.engine, r))
    }

    pub fn active(&self) -> impl Iterator<Item = &ReportSuggestion> {
        self.suggestions.iter().filter(|s| s.status == SuggestionStatus::Active)
    }
}

fn node_refs<'a>(snapshot: &CondensedUiJson, ids: impl Iterator<Item = &'a str>) -> (Vec<NodeRef>, Vec<String>) {
    let mut nodes: Vec<NodeRef> = Vec::new();
    let mut unresolved: Vec<String> = Vec::new();
    for id in ids {
        if nodes.iter().any(|n| n.id == id) || unresolved.iter().any(|u| u == id) {
            continue;
        }
        match snapshot.root.find(id) {
            Some(n) => nodes.push(NodeRef {
                id: n.id.clone(),
                name: n.name.clone().unwrap_or_else(|| n.id.clone()),
                bounds: n.bounds,
            }),
            None => unresolved.push(id.to_string()),
        }
    }
    (nodes, unresolved)
}

fn link_text(name: &str) -> String {
    name.replace('\\', "\\\\").replace('[', "\\[").replace(']', "\\]")
}

/// Markdown rendering of the active suggestions: one section per suggestion
/// with the standard, gap and fix, then links to the cited nodes.
pub fn render_report_markdown(report: &Report) -> String {
    let active: Vec<&ReportSuggestion> = report.active().collect();
    let mut out = format!(
        "# Evaluation report\n\nSession `{}`, round {}, {} engine. {} {}.\n",
        report.session_id,
        report.round,
        report.engine.as_str(),
        active.len(),
        if active.len() == 1 { "suggestion" } else { "suggestions" }
    );
    for (i, s) in active.iter().enumerate() {
        out.push_str(&format!("\n## {}. {}\n\n", i + 1, s.guideline));
        out.push_str(&format!("**Standard.** {}\n\n", s.standard));
        out.push_str(&format!("**Gap.** {}\n\n", s.gap));
        out.push_str(&format!("**Fix.** {}\n", s.fix));
        if !s.nodes.is_empty() {
            let links: Vec<String> = s.nodes.iter().map(|n| format!("[{}](#{})", link_text(&n.name), n.id)).collect();
            out.push_str(&format!("\nElements: {}\n", links.join(", ")));
        }
        if !s.unresolved_refs.is_empty() {
            out.push_str(&format!("\nNot found in this round: {}\n", s.unresolved_refs.join(", ")));
        }
    }
    out
}
