//! Design-document tree for a single static UI screen.
//!
//! Documents use the `heurex-design/1` JSON dialect: a tree of nodes with
//! `id`, `name`, `type`, `bounds` (`[x, y, width, height]`, top-left origin)
//! and optional text and style attributes. Parsing validates the tree and
//! builds an id index; the resulting [`DesignDocument`] is immutable.

use std::collections::HashMap;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Schema tag written into serialized documents.
pub const DESIGN_SCHEMA: &str = "heurex-design/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("malformed design JSON: {0}")]
    MalformedJson(String),
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{0}` has children but is not a GROUP")]
    ChildrenOnNonGroup(String),
    #[error("node `{0}` has a negative width or height")]
    NegativeDimension(String),
    #[error("node `{0}` has a non-finite coordinate")]
    NonFiniteBounds(String),
    #[error("node `{0}` has a color channel out of range")]
    ColorOutOfRange(String),
    #[error("root node `{0}` must be a GROUP")]
    RootNotGroup(String),
    #[error("unsupported schema `{0}`")]
    UnsupportedSchema(String),
}

/// Axis-aligned box in screen pixels, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn left(&self) -> f64 {
        self.x
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn top(&self) -> f64 {
        self.y
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn center_x(&self) -> f64 {
        self.x + self.width / 2.0
    }

    pub fn center_y(&self) -> f64 {
        self.y + self.height / 2.0
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.width.is_finite() && self.height.is_finite()
    }

    /// Area of the intersection with `other`, zero when disjoint.
    pub fn intersection_area(&self, other: &Bounds) -> f64 {
        let w = self.right().min(other.right()) - self.left().max(other.left());
        let h = self.bottom().min(other.bottom()) - self.top().max(other.top());
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.left() <= other.left()
            && self.top() <= other.top()
            && self.right() >= other.right()
            && self.bottom() >= other.bottom()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Bounds {
        Bounds::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.width, self.height]
    }
}

impl From<[f64; 4]> for Bounds {
    fn from([x, y, width, height]: [f64; 4]) -> Self {
        Bounds { x, y, width, height }
    }
}

impl Serialize for Bounds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        <[f64; 4]>::deserialize(deserializer).map(Bounds::from)
    }
}

/// RGBA color; channels 0-255, alpha 0.0-1.0.
///
/// Accepts either `{"r":..,"g":..,"b":..,"a":..}` or `"#RRGGBB"` /
/// `"#RRGGBBAA"` on input and always writes the object form. Channels are
/// kept as `f64` until validation so out-of-range values surface as
/// [`DesignError::ColorOutOfRange`] rather than a JSON error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Color {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Color {
    pub const WHITE: Color = Color::rgb(255, 255, 255);
    pub const BLACK: Color = Color::rgb(0, 0, 0);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Color { r: r as f64, g: g as f64, b: b as f64, a: 1.0 }
    }

    pub const fn rgba(r: u8, g: u8, b: u8, a: f64) -> Self {
        Color { r: r as f64, g: g as f64, b: b as f64, a }
    }

    pub fn is_valid(&self) -> bool {
        let channel = |c: f64| c.is_finite() && c.fract() == 0.0 && (0.0..=255.0).contains(&c);
        channel(self.r) && channel(self.g) && channel(self.b) && self.a.is_finite() && (0.0..=1.0).contains(&self.a)
    }

    pub fn is_opaque(&self) -> bool {
        self.a >= 1.0
    }

    /// `#RRGGBB`, or `#RRGGBBAA` when alpha is below 1.
    pub fn to_hex(&self) -> String {
        let c = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        if self.is_opaque() {
            format!("#{:02X}{:02X}{:02X}", c(self.r), c(self.g), c(self.b))
        } else {
            format!("#{:02X}{:02X}{:02X}{:02X}", c(self.r), c(self.g), c(self.b), c(self.a * 255.0))
        }
    }

    pub fn from_hex(s: &str) -> Option<Color> {
        let hex = s.strip_prefix('#')?;
        if !hex.is_ascii() || (hex.len() != 6 && hex.len() != 8) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
        let a = if hex.len() == 8 { byte(6)? as f64 / 255.0 } else { 1.0 };
        Some(Color { r: byte(0)? as f64, g: byte(2)? as f64, b: byte(4)? as f64, a })
    }

    /// Source-over compositing of `self` on top of `below`.
    pub fn over(&self, below: &Color) -> Color {
        let a = self.a + below.a * (1.0 - self.a);
        if a <= 0.0 {
            return Color { r: 0.0, g: 0.0, b: 0.0, a: 0.0 };
        }
        let mix = |top: f64, bottom: f64| (top * self.a + bottom * below.a * (1.0 - self.a)) / a;
        Color { r: mix(self.r, below.r), g: mix(self.g, below.g), b: mix(self.b, below.b), a }
    }

    pub fn with_alpha(&self, a: f64) -> Color {
        Color { a, ..*self }
    }
}

#[derive(Serialize, Deserialize)]
struct ColorObject {
    r: f64,
    g: f64,
    b: f64,
    #[serde(default = "one")]
    a: f64,
}

fn one() -> f64 {
    1.0
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ColorObject { r: self.r, g: self.g, b: self.b, a: self.a }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Hex(String),
            Object(ColorObject),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Hex(s) => Color::from_hex(&s).ok_or_else(|| de::Error::custom(format!("invalid hex color `{s}`"))),
            Repr::Object(o) => Ok(Color { r: o.r, g: o.g, b: o.b, a: o.a }),
        }
    }
}

/// Element type. Only `Group` may have children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Group,
    Text,
    Image,
    Icon,
    Button,
    Input,
    Rectangle,
    Other(String),
}

impl NodeKind {
    pub fn as_str(&self) -> &str {
        match self {
            NodeKind::Group => "GROUP",
            NodeKind::Text => "TEXT",
            NodeKind::Image => "IMAGE",
            NodeKind::Icon => "ICON",
            NodeKind::Button => "BUTTON",
            NodeKind::Input => "INPUT",
            NodeKind::Rectangle => "RECTANGLE",
            NodeKind::Other(name) => name,
        }
    }

    pub fn parse(s: &str) -> NodeKind {
        match s.to_ascii_uppercase().as_str() {
            "GROUP" => NodeKind::Group,
            "TEXT" => NodeKind::Text,
            "IMAGE" => NodeKind::Image,
            "ICON" => NodeKind::Icon,
            "BUTTON" => NodeKind::Button,
            "INPUT" => NodeKind::Input,
            "RECTANGLE" => NodeKind::Rectangle,
            _ => NodeKind::Other(s.to_string()),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NodeKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NodeKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(|s| NodeKind::parse(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Font {
    pub family: String,
    pub size: f64,
    #[serde(default = "default_weight")]
    pub weight: u32,
}

pub const DEFAULT_FONT_WEIGHT: u32 = 400;

fn default_weight() -> u32 {
    DEFAULT_FONT_WEIGHT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub color: Color,
    #[serde(default)]
    pub weight: f64,
}

/// One layer of the mockup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignNode {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(rename = "type")]
    pub kind: NodeKind,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font: Option<Font>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke: Option<Stroke>,
    /// Layer opacity, 1.0 when absent.
    #[serde(default = "one")]
    pub opacity: f64,
    #[serde(default)]
    pub children: Vec<DesignNode>,
}

impl DesignNode {
    /// Bare node with default style; handy for tests and generators.
    pub fn new(id: impl Into<String>, kind: NodeKind, bounds: Bounds) -> Self {
        DesignNode {
            id: id.into(),
            name: String::new(),
            kind,
            bounds,
            text: None,
            font: None,
            fill: None,
            background: None,
            stroke: None,
            opacity: 1.0,
            children: Vec::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_children(mut self, children: Vec<DesignNode>) -> Self {
        self.children = children;
        self
    }

    pub fn is_group(&self) -> bool {
        self.kind == NodeKind::Group
    }

    /// Preorder traversal of this subtree, self first.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Name shown to people: the layer name, or the id when unnamed.
    pub fn display_name(&self) -> &str {
        if self.name.trim().is_empty() {
            &self.id
        } else {
            &self.name
        }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a DesignNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a DesignNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, rename = "exportedAt", skip_serializing_if = "Option::is_none")]
    pub exported_at: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct DocumentWire {
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    meta: SourceMeta,
    #[serde(default)]
    screen: Option<Bounds>,
    root: DesignNode,
}

/// A validated, indexed design document for one screen.
///
/// Construct with [`parse_document`] or [`DesignDocument::new`]; the tree
/// cannot be mutated afterwards, so the id index stays valid.
#[derive(Debug, Clone)]
pub struct DesignDocument {
    root: DesignNode,
    screen: Bounds,
    meta: SourceMeta,
    // id -> child-index path from the root
    index: HashMap<String, Vec<usize>>,
}

impl PartialEq for DesignDocument {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.screen == other.screen && self.meta == other.meta
    }
}

impl DesignDocument {
    /// Validates the tree. `screen` defaults to the root bounds.
    pub fn new(root: DesignNode, screen: Option<Bounds>, meta: SourceMeta) -> Result<Self, DesignError> {
        if root.kind != NodeKind::Group {
            return Err(DesignError::RootNotGroup(root.id.clone()));
        }
        let mut index = HashMap::new();
        let mut path = Vec::new();
        validate_node(&root, &mut path, &mut index)?;
        let screen = screen.unwrap_or(root.bounds);
        if !screen.is_finite() {
            return Err(DesignError::NonFiniteBounds("<screen>".into()));
        }
        if screen.width < 0.0 || screen.height < 0.0 {
            return Err(DesignError::NegativeDimension("<screen>".into()));
        }
        Ok(DesignDocument { root, screen, meta, index })
    }

    pub fn root(&self) -> &DesignNode {
        &self.root
    }

    pub fn screen(&self) -> Bounds {
        self.screen
    }

    pub fn meta(&self) -> &SourceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.children.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Node with the given id, if any.
    pub fn lookup(&self, id: &str) -> Option<&DesignNode> {
        let path = self.index.get(id)?;
        let mut node = &self.root;
        for &i in path {
            node = &node.children[i];
        }
        Some(node)
    }

    /// True when `ancestor` is a strict ancestor of `descendant`.
    pub fn is_ancestor(&self, ancestor: &str, descendant: &str) -> bool {
        match (self.index.get(ancestor), self.index.get(descendant)) {
            (Some(a), Some(d)) => a.len() < d.len() && d.starts_with(a),
            _ => false,
        }
    }

    /// Ancestors of `id` from the root down, excluding the node itself.
    pub fn ancestors(&self, id: &str) -> Vec<&DesignNode> {
        let Some(path) = self.index.get(id) else { return Vec::new() };
        let mut out = Vec::with_capacity(path.len());
        let mut node = &self.root;
        for &i in path {
            out.push(node);
            node = &node.children[i];
        }
        out
    }

    pub fn nodes(&self) -> Preorder<'_> {
        self.root.preorder()
    }

    /// Copy of the document with some layers renamed; ids not present are ignored.
    pub fn with_names(&self, names: &HashMap<String, String>) -> DesignDocument {
        fn rename(node: &mut DesignNode, names: &HashMap<String, String>) {
            if let Some(name) = names.get(&node.id) {
                node.name = name.clone();
            }
            node.children.iter_mut().for_each(|c| rename(c, names));
        }
        let mut doc = self.clone();
        rename(&mut doc.root, names);
        doc
    }

    /// Full serialization in the `heurex-design/1` file format (pretty-printed).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("document serializes")
    }

    fn to_wire(&self) -> DocumentWire {
        DocumentWire {
            schema: Some(DESIGN_SCHEMA.to_string()),
            meta: self.meta.clone(),
            screen: Some(self.screen),
            root: self.root.clone(),
        }
    }
}

impl Serialize for DesignDocument {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_wire().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DesignDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = DocumentWire::deserialize(deserializer)?;
        from_wire(wire).map_err(de::Error::custom)
    }
}

fn from_wire(wire: DocumentWire) -> Result<DesignDocument, DesignError> {
    if let Some(schema) = &wire.schema {
        if schema != DESIGN_SCHEMA {
            return Err(DesignError::UnsupportedSchema(schema.clone()));
        }
    }
    DesignDocument::new(wire.root, wire.screen, wire.meta)
}

fn validate_node(
    node: &DesignNode,
    path: &mut Vec<usize>,
    index: &mut HashMap<String, Vec<usize>>,
) -> Result<(), DesignError> {
    if index.insert(node.id.clone(), path.clone()).is_some() {
        return Err(DesignError::DuplicateId(node.id.clone()));
    }
    if !node.bounds.is_finite() || !node.opacity.is_finite() {
        return Err(DesignError::NonFiniteBounds(node.id.clone()));
    }
    if node.bounds.width < 0.0 || node.bounds.height < 0.0 {
        return Err(DesignError::NegativeDimension(node.id.clone()));
    }
    let colors_ok = [node.fill, node.background, node.stroke.as_ref().map(|s| s.color)]
        .iter()
        .flatten()
        .all(Color::is_valid);
    if !colors_ok || !(0.0..=1.0).contains(&node.opacity) {
        return Err(DesignError::ColorOutOfRange(node.id.clone()));
    }
    if let Some(stroke) = &node.stroke {
        if !stroke.weight.is_finite() {
            return Err(DesignError::NonFiniteBounds(node.id.clone()));
        }
        if stroke.weight < 0.0 {
            return Err(DesignError::NegativeDimension(node.id.clone()));
        }
    }
    if let Some(font) = &node.font {
        if !font.size.is_finite() {
            return Err(DesignError::NonFiniteBounds(node.id.clone()));
        }
        if font.size < 0.0 {
            return Err(DesignError::NegativeDimension(node.id.clone()));
        }
    }
    if !node.children.is_empty() && node.kind != NodeKind::Group {
        return Err(DesignError::ChildrenOnNonGroup(node.id.clone()));
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        validate_node(child, path, index)?;
        path.pop();
    }
    Ok(())
}

/// Parses and validates a `heurex-design/1` document.
pub fn parse_document(bytes: &[u8]) -> Result<DesignDocument, DesignError> {
    let wire: DocumentWire =
        serde_json::from_slice(bytes).map_err(|e| DesignError::MalformedJson(e.to_string()))?;
    from_wire(wire)
}

/// True for empty names and tool placeholders like `Group 12` or `Rectangle 3`.
pub fn is_placeholder_name(name: &str) -> bool {
    let name = name.trim();
    if name.is_empty() {
        return true;
    }
    ["Group ", "Rectangle "].iter().any(|prefix| {
        name.strip_prefix(prefix)
            .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
    })
}

/// Groups lacking a meaningful name, in preorder.
pub fn unnamed_groups(doc: &DesignDocument) -> Vec<&DesignNode> {
    doc.nodes().filter(|n| n.is_group() && is_placeholder_name(&n.name)).collect()
}
