//! Guideline catalogs: the three built-in sets and user-supplied lists.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuidelineError {
    #[error("guideline text is empty")]
    EmptyInput,
    #[error("unknown guideline set `{0}`")]
    UnknownSet(String),
    #[error("invalid guideline set: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guideline {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineSet {
    pub id: String,
    pub title: String,
    pub guidelines: Vec<Guideline>,
}

impl GuidelineSet {
    /// Parses the guideline-set file format `{id, title, guidelines: [{id, name, body}]}`.
    pub fn from_json(text: &str) -> Result<GuidelineSet, GuidelineError> {
        let set: GuidelineSet = serde_json::from_str(text).map_err(|e| GuidelineError::Invalid(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), GuidelineError> {
        if self.guidelines.is_empty() {
            return Err(GuidelineError::Invalid(format!("set `{}` has no guidelines", self.id)));
        }
        let mut seen = HashSet::new();
        for g in &self.guidelines {
            if g.name.trim().is_empty() {
                return Err(GuidelineError::Invalid(format!("guideline `{}` has an empty name", g.id)));
            }
            if !seen.insert(g.id.as_str()) {
                return Err(GuidelineError::Invalid(format!("duplicate guideline id `{}`", g.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.guidelines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guidelines.is_empty()
    }

    pub fn find_by_name(&self, name: &str) -> Option<&Guideline> {
        let key = normalize_name(name);
        self.guidelines.iter().find(|g| normalize_name(&g.name) == key)
    }
}

/// Case- and whitespace-insensitive key for guideline names; a leading list
/// number ("4. ") is ignored.
pub fn normalize_name(name: &str) -> String {
    let stripped = strip_marker(name.trim()).unwrap_or(name.trim());
    stripped.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Looks a guideline name up across several sets.
pub fn find_guideline<'a>(sets: &'a [GuidelineSet], name: &str) -> Option<&'a Guideline> {
    sets.iter().find_map(|s| s.find_by_name(name))
}

const NIELSEN: &str = include_str!("../data/nielsen.json");
const CROWDCRIT: &str = include_str!("../data/crowdcrit.json");
const SEMANTIC: &str = include_str!("../data/semantic.json");

/// Nielsen (10), CrowdCrit (7) and Semantic Grouping (5), in that order.
pub fn builtin_sets() -> &'static [GuidelineSet] {
    static SETS: OnceLock<Vec<GuidelineSet>> = OnceLock::new();
    SETS.get_or_init(|| {
        [NIELSEN, CROWDCRIT, SEMANTIC]
            .iter()
            .map(|text| GuidelineSet::from_json(text).expect("bundled guideline set is valid"))
            .collect()
    })
}

pub fn builtin_set(id: &str) -> Option<&'static GuidelineSet> {
    builtin_sets().iter().find(|s| s.id == id)
}

/// Resolves a list of built-in set ids such as `["nielsen", "crowdcrit"]`.
pub fn resolve_builtin<S: AsRef<str>>(ids: &[S]) -> Result<Vec<GuidelineSet>, GuidelineError> {
    ids.iter()
        .map(|id| {
            let id = id.as_ref().trim();
            builtin_set(id).cloned().ok_or_else(|| GuidelineError::UnknownSet(id.to_string()))
        })
        .collect()
}

/// Returns the text after a list marker (`1.`, `2)`, `-`, `*`, `•`), or
/// `None` when the line does not start with one.
fn strip_marker(line: &str) -> Option<&str> {
    let line = line.trim_start();
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    let rest = if digits > 0 {
        let after = &line[digits..];
        after.strip_prefix('.').or_else(|| after.strip_prefix(')'))?
    } else {
        let mut chars = line.chars();
        match chars.next() {
            Some('-' | '*' | '•') => chars.as_str(),
            _ => return None,
        }
    };
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim())
    } else {
        None
    }
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

fn guideline_from_item(item: &str) -> Guideline {
    match item.split_once(':') {
        Some((name, body)) if !name.trim().is_empty() => Guideline {
            id: String::new(),
            name: name.trim().to_string(),
            body: body.trim().to_string(),
        },
        _ => Guideline {
            id: String::new(),
            name: item.split_whitespace().take(6).collect::<Vec<_>>().join(" "),
            body: item.to_string(),
        },
    }
}

/// Parses a free-form list into a custom set.
///
/// Every non-blank line is an item, except that a line without a list marker
/// directly below a marked item continues that item. Lines starting with `#`
/// are headings and are skipped. `Name: body` splits on the first colon;
/// otherwise the name is the first six words.
pub fn parse_custom(text: &str) -> Result<GuidelineSet, GuidelineError> {
    let mut items: Vec<String> = Vec::new();
    let mut continuable = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continuable = false;
            continue;
        }
        match strip_marker(trimmed) {
            Some("") => continuable = false,
            Some(rest) => {
                items.push(rest.to_string());
                continuable = true;
            }
            None if continuable => {
                let last = items.last_mut().expect("continuable implies an item");
                last.push(' ');
                last.push_str(trimmed);
            }
            None => items.push(trimmed.to_string()),
        }
    }
    if items.is_empty() {
        return Err(GuidelineError::EmptyInput);
    }
    let mut seen = HashSet::new();
    let guidelines = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let mut g = guideline_from_item(item);
            let base = match slug(&g.name) {
                s if s.is_empty() => format!("guideline-{}", i + 1),
                s => s,
            };
            let mut id = base.clone();
            let mut n = 2;
            while !seen.insert(id.clone()) {
                id = format!("{base}-{n}");
                n += 1;
            }
            g.id = id;
            g
        })
        .collect();
    Ok(GuidelineSet { id: "custom".into(), title: "Custom Guidelines".into(), guidelines })
}

/// Renders sets as `## Title` headers followed by numbered `Name: body` lines.
pub fn render_guidelines_text(sets: &[GuidelineSet]) -> String {
    render_guidelines_with(sets, true)
}

/// Like [`render_guidelines_text`]; with `include_bodies = false` only the
/// names are listed, which keeps long catalogs inside the prompt budget.
pub fn render_guidelines_with(sets: &[GuidelineSet], include_bodies: bool) -> String {
    let mut out = String::new();
    for (i, set) in sets.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("## ");
        out.push_str(&set.title);
        out.push('\n');
        for (n, g) in set.guidelines.iter().enumerate() {
            let body = g.body.split_whitespace().collect::<Vec<_>>().join(" ");
            if include_bodies && !body.is_empty() {
                out.push_str(&format!("{}. {}: {}\n", n + 1, g.name, body));
            } else {
                out.push_str(&format!("{}. {}\n", n + 1, g.name));
            }
        }
    }
    out
}
