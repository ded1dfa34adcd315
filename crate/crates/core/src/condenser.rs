//! Compact UI JSON for the evaluator, plus token estimation.
//!
//! The condensed form keeps ids, meaningful names, element types, bounds,
//! text and non-default style. Placeholder names, default opacity, zero-width
//! strokes, the normal font weight and document metadata are dropped; colors
//! become `#RRGGBB` (alpha appended only when translucent) and pixel values
//! are rounded to integers. Leaves carry no `children` key; groups always do.

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::design_tree::{is_placeholder_name, DesignDocument, DesignNode, NodeKind, DEFAULT_FONT_WEIGHT};

/// Prompt budget in estimated tokens.
pub const DEFAULT_TOKEN_BUDGET: usize = 8100;

/// Characters per token used by [`estimate_tokens`].
pub const DEFAULT_CHARS_PER_TOKEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CondenseError {
    #[error("unknown node id `{0}`")]
    UnknownId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CondenseOptions {
    pub round_px: bool,
    pub drop_defaults: bool,
}

impl Default for CondenseOptions {
    fn default() -> Self {
        CondenseOptions { round_px: true, drop_defaults: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedFont {
    pub family: String,
    #[serde(serialize_with = "px")]
    pub size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedStroke {
    pub color: String,
    #[serde(serialize_with = "px")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedNode {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "type")]
    pub kind: NodeKind,
    #[serde(serialize_with = "px_array")]
    pub bounds: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font: Option<CondensedFont>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke: Option<CondensedStroke>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<CondensedNode>>,
}

impl CondensedNode {
    pub fn preorder(&self) -> impl Iterator<Item = &CondensedNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            if let Some(children) = &node.children {
                stack.extend(children.iter().rev());
            }
            Some(node)
        })
    }

    pub fn find(&self, id: &str) -> Option<&CondensedNode> {
        self.preorder().find(|n| n.id == id)
    }
}

/// Condensed tree together with its exact serialized text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedUiJson {
    pub text: String,
    pub root: CondensedNode,
}

impl CondensedUiJson {
    fn from_root(root: CondensedNode) -> Self {
        let text = serde_json::to_string(&root).expect("condensed node serializes");
        CondensedUiJson { text, root }
    }

    pub fn tokens(&self) -> TokenEstimate {
        estimate_tokens(&self.text)
    }
}

// Integral values are written without a fractional part.
fn px<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(*v as i64)
    } else {
        s.serialize_f64(*v)
    }
}

fn px_array<S: Serializer>(v: &[f64; 4], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    struct Px(f64);
    impl Serialize for Px {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            px(&self.0, s)
        }
    }
    let mut t = s.serialize_tuple(4)?;
    for x in v {
        t.serialize_element(&Px(*x))?;
    }
    t.end()
}

fn round_px(v: f64, opts: CondenseOptions) -> f64 {
    if opts.round_px {
        // avoid emitting -0
        v.round() + 0.0
    } else {
        v
    }
}

fn condense_node(node: &DesignNode, opts: CondenseOptions) -> CondensedNode {
    let hidden = node.name.is_empty() || (opts.drop_defaults && is_placeholder_name(&node.name));
    let name = (!hidden).then(|| node.name.clone());
    let b = node.bounds;
    let font = node.font.as_ref().map(|f| CondensedFont {
        family: f.family.clone(),
        size: round_px(f.size, opts),
        weight: (!opts.drop_defaults || f.weight != DEFAULT_FONT_WEIGHT).then_some(f.weight),
    });
    let stroke = node
        .stroke
        .as_ref()
        .filter(|s| !opts.drop_defaults || s.weight > 0.0)
        .map(|s| CondensedStroke { color: s.color.to_hex(), weight: round_px(s.weight, opts) });
    let opacity = (!opts.drop_defaults || node.opacity < 1.0).then_some(node.opacity);
    CondensedNode {
        id: node.id.clone(),
        name,
        kind: node.kind.clone(),
        bounds: [round_px(b.x, opts), round_px(b.y, opts), round_px(b.width, opts), round_px(b.height, opts)],
        text: node.text.clone(),
        font,
        fill: node.fill.map(|c| c.to_hex()),
        background: node.background.map(|c| c.to_hex()),
        stroke,
        opacity,
        children: node
            .is_group()
            .then(|| node.children.iter().map(|c| condense_node(c, opts)).collect()),
    }
}

/// Condensed representation of the whole document.
pub fn condense(doc: &DesignDocument, opts: CondenseOptions) -> CondensedUiJson {
    CondensedUiJson::from_root(condense_node(doc.root(), opts))
}

/// Condensed representation of one node and its descendants.
pub fn subtree_condensed(
    doc: &DesignDocument,
    id: &str,
    opts: CondenseOptions,
) -> Result<CondensedUiJson, CondenseError> {
    let node = doc.lookup(id).ok_or_else(|| CondenseError::UnknownId(id.to_string()))?;
    Ok(CondensedUiJson::from_root(condense_node(node, opts)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct TokenEstimate(pub usize);

impl std::ops::Add for TokenEstimate {
    type Output = TokenEstimate;

    fn add(self, rhs: Self) -> Self::Output {
        TokenEstimate(self.0 + rhs.0)
    }
}

impl std::iter::Sum for TokenEstimate {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        TokenEstimate(iter.map(|t| t.0).sum())
    }
}

/// Character-count token estimator with a configurable divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenEstimator {
    chars_per_token: usize,
}

impl TokenEstimator {
    /// # Panics
    /// If `chars_per_token` is zero.
    pub fn new(chars_per_token: usize) -> Self {
        assert!(chars_per_token > 0, "chars_per_token must be positive");
        TokenEstimator { chars_per_token }
    }

    pub fn estimate(&self, text: &str) -> TokenEstimate {
        TokenEstimate(text.chars().count().div_ceil(self.chars_per_token))
    }
}

impl Default for TokenEstimator {
    fn default() -> Self {
        TokenEstimator::new(DEFAULT_CHARS_PER_TOKEN)
    }
}

/// `ceil(chars / 4)`.
pub fn estimate_tokens(text: &str) -> TokenEstimate {
    TokenEstimator::default().estimate(text)
}
