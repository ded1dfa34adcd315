use std::collections::{BTreeMap, HashSet};

use super::{fmt_px, line_status, Axis, LineStatus, RuleConfig, RuleFinding, RuleId};
use crate::design_tree::{DesignNode, NodeKind};

#[derive(Clone, Copy)]
enum Line {
    Left,
    Right,
    Top,
    Bottom,
    CenterX,
    CenterY,
}

impl Line {
    fn value(self, node: &DesignNode) -> f64 {
        let b = &node.bounds;
        match self {
            Line::Left => b.left(),
            Line::Right => b.right(),
            Line::Top => b.top(),
            Line::Bottom => b.bottom(),
            Line::CenterX => b.center_x(),
            Line::CenterY => b.center_y(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Line::Left => "left",
            Line::Right => "right",
            Line::Top => "top",
            Line::Bottom => "bottom",
            Line::CenterX => "horizontal center",
            Line::CenterY => "vertical center",
        }
    }
}

fn edges(axis: Axis) -> [Line; 2] {
    match axis {
        Axis::X => [Line::Left, Line::Right],
        Axis::Y => [Line::Top, Line::Bottom],
    }
}

fn center(axis: Axis) -> Line {
    match axis {
        Axis::X => Line::CenterX,
        Axis::Y => Line::CenterY,
    }
}

// Edge lines need a reference shared by two siblings; a center line may be
// set by a single sibling.
fn statuses(siblings: &[&DesignNode], line: Line, cfg: &RuleConfig, min_support: usize) -> Vec<LineStatus> {
    let values: Vec<f64> = siblings.iter().map(|n| line.value(n)).collect();
    line_status(&values, cfg.epsilon_align, cfg.near_miss_px, min_support)
}

/// Flags siblings whose left/right (or top/bottom) edges narrowly miss an
/// edge line their peers share.
///
/// A node is reported at most once per axis, using its smallest miss. A node
/// that already sits on a shared edge line, or on a shared center line, is
/// aligned on that axis and never reported.
pub fn check_edge_alignment(siblings: &[&DesignNode], cfg: &RuleConfig) -> Vec<RuleFinding> {
    let mut out = Vec::new();
    if siblings.len() < 2 {
        return out;
    }
    for axis in [Axis::X, Axis::Y] {
        let [first, second] = edges(axis);
        let per_line = [
            (first, statuses(siblings, first, cfg, 2)),
            (second, statuses(siblings, second, cfg, 2)),
            (center(axis), statuses(siblings, center(axis), cfg, 2)),
        ];
        for (i, node) in siblings.iter().enumerate() {
            if per_line.iter().any(|(_, s)| matches!(s[i], LineStatus::Aligned { .. })) {
                continue;
            }
            let mut best: Option<(Line, f64, f64)> = None;
            for (line, s) in &per_line[..2] {
                if let LineStatus::Outlier { reference, offset } = s[i] {
                    if best.is_none_or(|(_, _, o)| offset.abs() < o.abs()) {
                        best = Some((*line, reference, offset));
                    }
                }
            }
            if let Some((line, reference, offset)) = best {
                let message = format!(
                    "'{}' is {}px off the {} edge line at {}px shared by its siblings",
                    node.display_name(),
                    fmt_px(offset.abs()),
                    line.name(),
                    fmt_px(reference)
                );
                out.push(
                    RuleFinding::new(RuleId::EdgeAlignment, vec![node.id.clone()], message)
                        .on_axis(axis)
                        .measure("offset_px", offset)
                        .measure("reference_px", reference),
                );
            }
        }
    }
    out
}

/// Flags siblings whose center narrowly misses a center line shared with a
/// peer. Only centers are compared, so boxes of different sizes sharing a
/// center are aligned.
pub fn check_center_alignment(siblings: &[&DesignNode], cfg: &RuleConfig) -> Vec<RuleFinding> {
    let mut out = Vec::new();
    if siblings.len() < 2 {
        return out;
    }
    for axis in [Axis::X, Axis::Y] {
        let line = center(axis);
        for (node, status) in siblings.iter().zip(statuses(siblings, line, cfg, 1)) {
            if let LineStatus::Outlier { reference, offset } = status {
                let message = format!(
                    "'{}' has its {} {}px away from the center line at {}px of nearby siblings",
                    node.display_name(),
                    line.name(),
                    fmt_px(offset.abs()),
                    fmt_px(reference)
                );
                out.push(
                    RuleFinding::new(RuleId::CenterAlignment, vec![node.id.clone()], message)
                        .on_axis(axis)
                        .measure("offset_px", offset)
                        .measure("reference_px", reference),
                );
            }
        }
    }
    out
}

/// Nodes (with axis) that sit on or narrowly miss an edge line shared with a
/// sibling. Their center-line results add nothing beyond the edge check.
pub(super) fn edge_participation(siblings: &[&DesignNode], cfg: &RuleConfig) -> HashSet<(String, Axis)> {
    let mut out = HashSet::new();
    for axis in [Axis::X, Axis::Y] {
        for line in edges(axis) {
            for (node, s) in siblings.iter().zip(statuses(siblings, line, cfg, 2)) {
                if s != LineStatus::Unclustered {
                    out.insert((node.id.clone(), axis));
                }
            }
        }
    }
    out
}

/// Flags width or height that narrowly misses the size shared by siblings of
/// the same kind. Kinds are never compared with each other.
pub fn check_size_consistency(siblings: &[&DesignNode], cfg: &RuleConfig) -> Vec<RuleFinding> {
    let mut by_kind: BTreeMap<&NodeKind, Vec<&DesignNode>> = BTreeMap::new();
    for node in siblings {
        by_kind.entry(&node.kind).or_default().push(node);
    }
    let mut flagged: Vec<(usize, RuleFinding)> = Vec::new();
    for nodes in by_kind.values().filter(|v| v.len() >= 2) {
        let widths: Vec<f64> = nodes.iter().map(|n| n.bounds.width).collect();
        let heights: Vec<f64> = nodes.iter().map(|n| n.bounds.height).collect();
        let ws = line_status(&widths, cfg.epsilon_align, cfg.near_miss_px, 2);
        let hs = line_status(&heights, cfg.epsilon_align, cfg.near_miss_px, 2);
        for (i, node) in nodes.iter().enumerate() {
            let mut parts = Vec::new();
            let mut finding = RuleFinding::new(RuleId::SizeConsistency, vec![node.id.clone()], String::new());
            for (dim, status) in [("width", ws[i]), ("height", hs[i])] {
                if let LineStatus::Outlier { reference, offset } = status {
                    parts.push(format!("{dim} {} instead of {}", fmt_px(reference + offset), fmt_px(reference)));
                    finding = finding
                        .measure(&format!("{dim}_px"), reference + offset)
                        .measure(&format!("expected_{dim}_px"), reference);
                }
            }
            if !parts.is_empty() {
                finding.message = format!(
                    "'{}' is sized inconsistently with the other {} elements: {}",
                    node.display_name(),
                    node.kind.as_str().to_lowercase(),
                    parts.join(", ")
                );
                let pos = siblings.iter().position(|n| n.id == node.id).unwrap_or(usize::MAX);
                flagged.push((pos, finding));
            }
        }
    }
    flagged.sort_by_key(|(pos, _)| *pos);
    flagged.into_iter().map(|(_, f)| f).collect()
}
