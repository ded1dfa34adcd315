use super::{RuleConfig, RuleError, RuleFinding, RuleId};
use crate::design_tree::{Color, DesignDocument, DesignNode, NodeKind};

fn linear(channel: f64) -> f64 {
    let c = channel / 255.0;
    if c <= 0.03928 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// WCAG relative luminance of an opaque sRGB color.
pub fn relative_luminance(c: &Color) -> f64 {
    0.2126 * linear(c.r) + 0.7152 * linear(c.g) + 0.0722 * linear(c.b)
}

/// WCAG contrast ratio, from 1.0 to 21.0. Order of arguments does not matter.
pub fn contrast_ratio(a: &Color, b: &Color) -> f64 {
    let (la, lb) = (relative_luminance(a), relative_luminance(b));
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    (hi + 0.05) / (lo + 0.05)
}

/// Color painted under a node, composited from every earlier layer (in paint
/// order) whose box covers the node: group backgrounds and the background or
/// fill of shapes. Translucent stacks are composited over white. `None` when
/// nothing is painted underneath.
pub fn effective_background(doc: &DesignDocument, id: &str) -> Option<Color> {
    let target = doc.lookup(id)?;
    let mut layers = Vec::new();
    for node in doc.nodes() {
        if node.id == target.id {
            break;
        }
        if node.kind == NodeKind::Text || !node.bounds.contains(&target.bounds) {
            continue;
        }
        let color = if node.is_group() { node.background } else { node.background.or(node.fill) };
        if let Some(c) = color {
            layers.push(c.with_alpha(c.a * node.opacity));
        }
    }
    // start at the topmost opaque layer
    let start = layers.iter().rposition(Color::is_opaque).unwrap_or(0);
    let mut iter = layers[start..].iter();
    let first = *iter.next()?;
    let base = if first.is_opaque() { first } else { first.over(&Color::WHITE) };
    Some(iter.fold(base, |below, top| top.over(&below)))
}

/// Flags text whose contrast against `background` is below `min_contrast`.
/// The text fill is composited onto the background first.
pub fn check_contrast(
    node: &DesignNode,
    background: Option<Color>,
    cfg: &RuleConfig,
) -> Result<Vec<RuleFinding>, RuleError> {
    let fill = node.fill.ok_or_else(|| RuleError::MissingColor { node: node.id.clone(), which: "fill" })?;
    let background =
        background.ok_or_else(|| RuleError::MissingColor { node: node.id.clone(), which: "background" })?;
    let background = if background.is_opaque() { background } else { background.over(&Color::WHITE) };
    let text = fill.with_alpha(fill.a * node.opacity).over(&background);
    let ratio = contrast_ratio(&text, &background);
    if ratio >= cfg.min_contrast {
        return Ok(Vec::new());
    }
    let message = format!(
        "'{}' ({} on {}) has a contrast ratio of {:.2}:1, below the {}:1 minimum",
        node.display_name(),
        text.to_hex(),
        background.to_hex(),
        ratio,
        cfg.min_contrast
    );
    Ok(vec![RuleFinding::new(RuleId::Contrast, vec![node.id.clone()], message)
        .measure("contrast_ratio", ratio)
        .measure("min_contrast", cfg.min_contrast)])
}
