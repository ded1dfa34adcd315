//! Deterministic layout checks over the design tree.
//!
//! These cover the computable subset of visual heuristics (alignment,
//! spacing, sizing, overlap, contrast). Every finding cites a guideline by
//! name so it can be reported next to LLM output or used to cross-check it.

mod alignment;
mod contrast;
mod overlap;
mod spacing;
mod suggest;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design_tree::{DesignDocument, DesignNode, NodeKind};
use crate::guidelines::{find_guideline, GuidelineSet};

pub use alignment::{check_center_alignment, check_edge_alignment, check_size_consistency};
pub use contrast::{check_contrast, contrast_ratio, effective_background, relative_luminance};
pub use overlap::check_overlap;
pub use spacing::{check_spacing, detect_axis};
pub use suggest::finding_to_suggestion;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("node `{node}` has no {which} color")]
    MissingColor { node: String, which: &'static str },
    #[error("invalid rule config: {0}")]
    InvalidConfig(String),
}

/// Tolerances for the layout checks, all in pixels except where noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Edge, center and size deviations up to this are treated as aligned.
    pub epsilon_align: f64,
    /// Allowed deviation of a gap from the median gap.
    pub epsilon_gap: f64,
    /// Minimum text contrast ratio (1-21).
    pub min_contrast: f64,
    /// Overlap area over the smaller box's area above which a pair is flagged (0-1).
    pub overlap_min_fraction: f64,
    /// Values further apart than this are not considered attempts at the same
    /// line or size, so they are never compared.
    pub near_miss_px: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            epsilon_align: 1.0,
            epsilon_gap: 2.0,
            min_contrast: 4.5,
            overlap_min_fraction: 0.05,
            near_miss_px: 6.0,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), RuleError> {
        let fields = [
            ("epsilon_align", self.epsilon_align),
            ("epsilon_gap", self.epsilon_gap),
            ("min_contrast", self.min_contrast),
            ("overlap_min_fraction", self.overlap_min_fraction),
            ("near_miss_px", self.near_miss_px),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(RuleError::InvalidConfig(format!("{name} must be a nonnegative number")));
            }
        }
        if self.overlap_min_fraction > 1.0 {
            return Err(RuleError::InvalidConfig("overlap_min_fraction must be at most 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    EdgeAlignment,
    CenterAlignment,
    Spacing,
    SizeConsistency,
    Overlap,
    Contrast,
}

impl RuleId {
    pub const ALL: [RuleId; 6] = [
        RuleId::EdgeAlignment,
        RuleId::CenterAlignment,
        RuleId::Spacing,
        RuleId::SizeConsistency,
        RuleId::Overlap,
        RuleId::Contrast,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RuleId::EdgeAlignment => "edge-alignment",
            RuleId::CenterAlignment => "center-alignment",
            RuleId::Spacing => "spacing",
            RuleId::SizeConsistency => "size-consistency",
            RuleId::Overlap => "overlap",
            RuleId::Contrast => "contrast",
        }
    }

    /// Guideline names this rule can cite, most specific first.
    pub fn guideline_candidates(&self) -> &'static [&'static str] {
        match self {
            RuleId::EdgeAlignment | RuleId::CenterAlignment | RuleId::Spacing => {
                &["Consistency and Standards", "Layout"]
            }
            RuleId::SizeConsistency => &["Consistency and Standards", "Consistency"],
            RuleId::Overlap => &["Layout"],
            RuleId::Contrast => &["Readability"],
        }
    }

    pub fn default_guideline(&self) -> &'static str {
        self.guideline_candidates()[0]
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFinding {
    pub rule: RuleId,
    pub guideline: String,
    pub node_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    pub measurements: BTreeMap<String, f64>,
    pub message: String,
}

impl RuleFinding {
    pub(crate) fn new(rule: RuleId, node_ids: Vec<String>, message: String) -> Self {
        RuleFinding {
            rule,
            guideline: rule.default_guideline().to_string(),
            node_ids,
            axis: None,
            measurements: BTreeMap::new(),
            message,
        }
    }

    pub(crate) fn on_axis(mut self, axis: Axis) -> Self {
        self.axis = Some(axis);
        self
    }

    pub(crate) fn measure(mut self, key: &str, value: f64) -> Self {
        self.measurements.insert(key.to_string(), value);
        self
    }
}

/// Formats a pixel value: integers bare, otherwise up to two decimals.
pub(crate) fn fmt_px(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Relationship of one value to the line (or size) its near neighbours share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LineStatus {
    /// No other value within `near_miss_px`.
    Unclustered,
    Aligned { reference: f64 },
    Outlier { reference: f64, offset: f64 },
}

/// Clusters values by single linkage at `near_miss`; in each cluster of two
/// or more the reference is the value with most members within `eps`
/// (smallest value on ties) and members further than `eps` from it are
/// outliers. A cluster whose reference has fewer than `min_support` members
/// within `eps` is left unclustered.
pub(crate) fn line_status(values: &[f64], eps: f64, near_miss: f64, min_support: usize) -> Vec<LineStatus> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut status = vec![LineStatus::Unclustered; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - values[order[end - 1]] <= near_miss {
            end += 1;
        }
        let cluster = &order[start..end];
        if cluster.len() >= 2 {
            let support = |v: f64| cluster.iter().filter(|&&j| (values[j] - v).abs() <= eps).count();
            // cluster is sorted ascending, so the first maximum is the smallest value
            let mut reference = values[cluster[0]];
            let mut best = 0;
            for &i in cluster {
                let s = support(values[i]);
                if s > best {
                    best = s;
                    reference = values[i];
                }
            }
            if best < min_support {
                start = end;
                continue;
            }
            for &i in cluster {
                let offset = values[i] - reference;
                status[i] = if offset.abs() <= eps {
                    LineStatus::Aligned { reference }
                } else {
                    LineStatus::Outlier { reference, offset }
                };
            }
        }
        start = end;
    }
    status
}

struct Enabled {
    guideline: HashMap<RuleId, String>,
}

impl Enabled {
    fn new(sets: &[GuidelineSet]) -> Self {
        let guideline = RuleId::ALL
            .iter()
            .filter_map(|rule| {
                rule.guideline_candidates()
                    .iter()
                    .find_map(|name| find_guideline(sets, name))
                    .map(|g| (*rule, g.name.clone()))
            })
            .collect();
        Enabled { guideline }
    }

    fn on(&self, rule: RuleId) -> bool {
        self.guideline.contains_key(&rule)
    }
}

/// Runs every rule whose guideline appears in one of the selected sets.
///
/// Checks run per group over its direct children; contrast runs on every
/// text node with a fill and a resolvable backdrop. Output is sorted by the
/// preorder position of the first node, then by rule id.
pub fn run_rules(doc: &DesignDocument, sets: &[GuidelineSet], cfg: &RuleConfig) -> Vec<RuleFinding> {
    let enabled = Enabled::new(sets);
    let mut findings = Vec::new();

    for group in doc.nodes().filter(|n| n.is_group()) {
        let siblings: Vec<&DesignNode> = group.children.iter().collect();
        if enabled.on(RuleId::EdgeAlignment) || enabled.on(RuleId::CenterAlignment) {
            let edges = check_edge_alignment(&siblings, cfg);
            if enabled.on(RuleId::CenterAlignment) {
                let edge_lined = alignment::edge_participation(&siblings, cfg);
                findings.extend(check_center_alignment(&siblings, cfg).into_iter().filter(|f| {
                    let axis = f.axis.unwrap_or(Axis::X);
                    !edge_lined.contains(&(f.node_ids[0].clone(), axis))
                }));
            }
            if enabled.on(RuleId::EdgeAlignment) {
                findings.extend(edges);
            }
        }
        if enabled.on(RuleId::Spacing) {
            // only runs of the same kind are expected to be evenly spaced
            let mut by_kind: BTreeMap<&NodeKind, Vec<&DesignNode>> = BTreeMap::new();
            for n in &siblings {
                by_kind.entry(&n.kind).or_default().push(n);
            }
            for run in by_kind.values().filter(|r| r.len() >= 3) {
                if let Some(axis) = detect_axis(run) {
                    findings.extend(check_spacing(run, axis, cfg));
                }
            }
        }
        if enabled.on(RuleId::SizeConsistency) {
            // text boxes follow their content and group boxes their children
            let sized: Vec<&DesignNode> = siblings
                .iter()
                .copied()
                .filter(|n| n.kind != NodeKind::Text && n.kind != NodeKind::Group)
                .collect();
            findings.extend(check_size_consistency(&sized, cfg));
        }
        if enabled.on(RuleId::Overlap) {
            let by_id: HashMap<&str, &DesignNode> = siblings.iter().map(|n| (n.id.as_str(), *n)).collect();
            findings.extend(check_overlap(&siblings, cfg).into_iter().filter(|f| {
                let a = by_id[f.node_ids[0].as_str()];
                let b = by_id[f.node_ids[1].as_str()];
                !is_backdrop(a, b) && !is_backdrop(b, a)
            }));
        }
    }

    if enabled.on(RuleId::Contrast) {
        for text in doc.nodes().filter(|n| n.kind == NodeKind::Text && n.fill.is_some()) {
            if let Some(bg) = effective_background(doc, &text.id) {
                if let Ok(found) = check_contrast(text, Some(bg), cfg) {
                    findings.extend(found);
                }
            }
        }
    }

    for f in &mut findings {
        f.guideline = enabled.guideline[&f.rule].clone();
    }
    let position: HashMap<&str, usize> = doc.nodes().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut keyed: Vec<(usize, RuleFinding)> = findings
        .into_iter()
        .map(|f| (position.get(f.node_ids[0].as_str()).copied().unwrap_or(usize::MAX), f))
        .collect();
    keyed.sort_by(|(pa, a), (pb, b)| pa.cmp(pb).then_with(|| a.rule.as_str().cmp(b.rule.as_str())));
    keyed.into_iter().map(|(_, f)| f).collect()
}

// A rectangle or image drawn behind a sibling it fully contains is a
// backdrop (a card, a photo with a badge), not an overlap.
fn is_backdrop(back: &DesignNode, front: &DesignNode) -> bool {
    matches!(back.kind, NodeKind::Rectangle | NodeKind::Image) && back.bounds.contains(&front.bounds)
}
