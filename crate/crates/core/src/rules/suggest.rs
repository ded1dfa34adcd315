use super::{fmt_px, Axis, RuleFinding, RuleId};
use crate::design_tree::DesignDocument;
use crate::llm::{Constructive, ElementRef, RawViolation, Suggestion};

fn name_of(doc: &DesignDocument, id: &str) -> String {
    doc.lookup(id).map(|n| n.display_name().to_string()).unwrap_or_else(|| id.to_string())
}

fn standard(rule: RuleId) -> &'static str {
    match rule {
        RuleId::EdgeAlignment => "Elements in a group should share edge lines so the layout reads as orderly.",
        RuleId::CenterAlignment => "Elements arranged around a common center should share the same center line.",
        RuleId::Spacing => "Repeated elements in a row or column should be separated by equal gaps.",
        RuleId::SizeConsistency => "Elements of the same kind within a group should have the same size.",
        RuleId::Overlap => "Elements should not cover each other unless the layering is intentional.",
        RuleId::Contrast => "Text needs enough contrast with its background to be read easily.",
    }
}

fn shift(axis: Option<Axis>, offset: f64) -> &'static str {
    match (axis, offset > 0.0) {
        (Some(Axis::Y), true) => "up",
        (Some(Axis::Y), false) => "down",
        (_, true) => "left",
        (_, false) => "right",
    }
}

fn fix(finding: &RuleFinding, doc: &DesignDocument) -> String {
    let m = |k: &str| finding.measurements.get(k).copied().unwrap_or(0.0);
    let first = name_of(doc, &finding.node_ids[0]);
    match finding.rule {
        RuleId::EdgeAlignment | RuleId::CenterAlignment => format!(
            "Move '{first}' {}px {} so it lines up with its siblings at {}px.",
            fmt_px(m("offset_px").abs()),
            shift(finding.axis, m("offset_px")),
            fmt_px(m("reference_px"))
        ),
        RuleId::Spacing => {
            let second = finding.node_ids.get(1).map(|id| name_of(doc, id)).unwrap_or_default();
            format!(
                "Change the gap between '{first}' and '{second}' to {}px to match the rest of the group.",
                fmt_px(m("median_gap_px"))
            )
        }
        RuleId::SizeConsistency => {
            let mut dims = Vec::new();
            if let Some(w) = finding.measurements.get("expected_width_px") {
                dims.push(format!("width {}px", fmt_px(*w)));
            }
            if let Some(h) = finding.measurements.get("expected_height_px") {
                dims.push(format!("height {}px", fmt_px(*h)));
            }
            format!("Resize '{first}' to {} like the other elements of its kind.", dims.join(" and "))
        }
        RuleId::Overlap => {
            let second = finding.node_ids.get(1).map(|id| name_of(doc, id)).unwrap_or_default();
            format!(
                "Check whether '{first}' and '{second}' visibly overlap. If they do, move or resize one of them; \
if only their boxes overlap, tighten the boxes."
            )
        }
        RuleId::Contrast => format!(
            "Darken the text or lighten the background of '{first}' (or the reverse) until the contrast ratio is at \
least {}:1.",
            m("min_contrast")
        ),
    }
}

/// Phrases a rule finding as a suggestion with templated standard, gap and fix.
pub fn finding_to_suggestion(finding: &RuleFinding, doc: &DesignDocument) -> Suggestion {
    let violation = RawViolation {
        guideline: finding.guideline.clone(),
        guideline_resolved: true,
        elements: finding
            .node_ids
            .iter()
            .map(|id| ElementRef { id: id.clone(), resolved: doc.contains(id) })
            .collect(),
        explanation: finding.message.clone(),
    };
    let constructive = Constructive {
        standard: format!("{}: {}", finding.guideline, standard(finding.rule)),
        gap: format!("{}.", finding.message.trim_end_matches('.')),
        fix: fix(finding, doc),
    };
    Suggestion::new(violation, constructive)
}
