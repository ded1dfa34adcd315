use super::{fmt_px, Axis, RuleConfig, RuleFinding, RuleId};
use crate::design_tree::DesignNode;

fn span(node: &DesignNode, axis: Axis) -> (f64, f64) {
    let b = &node.bounds;
    match axis {
        Axis::X => (b.left(), b.right()),
        Axis::Y => (b.top(), b.bottom()),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Axis along which siblings are laid out: a row when all vertical extents
/// share a common band, a column when all horizontal extents do.
pub fn detect_axis(siblings: &[&DesignNode]) -> Option<Axis> {
    if siblings.len() < 2 {
        return None;
    }
    let common = |axis: Axis| {
        let lo = siblings.iter().map(|n| span(n, axis).0).fold(f64::NEG_INFINITY, f64::max);
        let hi = siblings.iter().map(|n| span(n, axis).1).fold(f64::INFINITY, f64::min);
        lo < hi
    };
    if common(Axis::Y) {
        Some(Axis::X)
    } else if common(Axis::X) {
        Some(Axis::Y)
    } else {
        None
    }
}

/// Flags consecutive gaps along `axis` that deviate from the median gap by
/// more than `epsilon_gap` but no more than `near_miss_px`. Larger
/// deviations read as deliberate separation.
///
/// Siblings are ordered by geometry (leading edge, trailing edge, then id),
/// so declaration order does not matter. Needs at least three siblings.
pub fn check_spacing(siblings: &[&DesignNode], axis: Axis, cfg: &RuleConfig) -> Vec<RuleFinding> {
    if siblings.len() < 3 {
        return Vec::new();
    }
    let mut ordered = siblings.to_vec();
    ordered.sort_by(|a, b| {
        let (sa, sb) = (span(a, axis), span(b, axis));
        sa.0.total_cmp(&sb.0).then(sa.1.total_cmp(&sb.1)).then_with(|| a.id.cmp(&b.id))
    });
    let gaps: Vec<f64> = ordered.windows(2).map(|w| span(w[1], axis).0 - span(w[0], axis).1).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = median(&sorted);
    let direction = match axis {
        Axis::X => "horizontal",
        Axis::Y => "vertical",
    };
    gaps.iter()
        .enumerate()
        .filter(|(_, g)| {
            let d = (**g - median).abs();
            d > cfg.epsilon_gap && d <= cfg.near_miss_px
        })
        .map(|(i, &gap)| {
            let (a, b) = (ordered[i], ordered[i + 1]);
            let message = format!(
                "The {direction} gap between '{}' and '{}' is {}px while the other gaps in this group are around {}px",
                a.display_name(),
                b.display_name(),
                fmt_px(gap),
                fmt_px(median)
            );
            RuleFinding::new(RuleId::Spacing, vec![a.id.clone(), b.id.clone()], message)
                .on_axis(axis)
                .measure("gap_px", gap)
                .measure("median_gap_px", median)
        })
        .collect()
}
