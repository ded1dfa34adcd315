use std::collections::HashSet;

use super::{RuleConfig, RuleFinding, RuleId};
use crate::design_tree::DesignNode;

/// Flags pairs whose intersection covers more than `overlap_min_fraction` of
/// the smaller box. Pairs where one node contains the other in its subtree are
/// skipped, as are zero-area boxes. The fraction is reported because
/// bounding-box overlap does not always mean visible content overlaps.
pub fn check_overlap(nodes: &[&DesignNode], cfg: &RuleConfig) -> Vec<RuleFinding> {
    let descendants: Vec<HashSet<&str>> = nodes
        .iter()
        .map(|n| n.preorder().skip(1).map(|d| d.id.as_str()).collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (a, b) = (nodes[i], nodes[j]);
            if descendants[i].contains(b.id.as_str()) || descendants[j].contains(a.id.as_str()) {
                continue;
            }
            let smaller = a.bounds.area().min(b.bounds.area());
            if smaller <= 0.0 {
                continue;
            }
            let fraction = a.bounds.intersection_area(&b.bounds) / smaller;
            if fraction > cfg.overlap_min_fraction {
                let message = format!(
                    "The boxes of '{}' and '{}' overlap by {:.0}% of the smaller one",
                    a.display_name(),
                    b.display_name(),
                    fraction * 100.0
                );
                out.push(
                    RuleFinding::new(RuleId::Overlap, vec![a.id.clone(), b.id.clone()], message)
                        .measure("overlap_fraction", fraction),
                );
            }
        }
    }
    out
}
