use std::collections::BTreeMap;

use serde_json::Value;

use super::{Constructive, ElementRef, ParseError, RawViolation};
use crate::design_tree::DesignDocument;
use crate::guidelines::{find_guideline, GuidelineSet};

fn unparseable(reason: impl Into<String>, raw: &str) -> ParseError {
    ParseError::Unparseable { reason: reason.into(), raw: raw.to_string() }
}

/// Strips one surrounding Markdown code fence, if present.
fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let Some(body) = rest.strip_suffix("```") else {
        return t;
    };
    // drop the info string ("json") on the opening line
    match body.find('\n') {
        Some(nl) => body[nl + 1..].trim(),
        None => body.trim(),
    }
}

fn parse_json(raw: &str) -> Result<Value, ParseError> {
    serde_json::from_str(strip_fence(raw)).map_err(|e| unparseable(e.to_string(), raw))
}

fn parse_array(raw: &str) -> Result<Vec<Value>, ParseError> {
    match parse_json(raw)? {
        Value::Array(items) => Ok(items),
        _ => Err(unparseable("expected a JSON array", raw)),
    }
}

fn string_field<'a>(item: &'a Value, key: &str, index: usize, raw: &str) -> Result<&'a str, ParseError> {
    item.get(key).and_then(Value::as_str).ok_or_else(|| unparseable(format!("item {index}: `{key}` must be a string"), raw))
}

/// Parses the evaluation reply, a JSON array of `{guideline, elements,
/// explanation}`. Guideline names are matched against `sets` and element ids
/// against `doc`; unmatched ones are kept and marked unresolved.
pub fn parse_eval_response(
    raw: &str,
    doc: &DesignDocument,
    sets: &[GuidelineSet],
) -> Result<Vec<RawViolation>, ParseError> {
    let items = parse_array(raw)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if !item.is_object() {
            return Err(unparseable(format!("item {i} is not an object"), raw));
        }
        let cited = string_field(item, "guideline", i, raw)?.trim();
        let explanation = string_field(item, "explanation", i, raw)?.trim();
        let elements = item
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| unparseable(format!("item {i}: `elements` must be an array"), raw))?;
        let mut refs = Vec::with_capacity(elements.len());
        for e in elements {
            let id = e.as_str().ok_or_else(|| unparseable(format!("item {i}: element ids must be strings"), raw))?;
            refs.push(ElementRef { id: id.to_string(), resolved: doc.contains(id) });
        }
        let (guideline, guideline_resolved) = match find_guideline(sets, cited) {
            Some(g) => (g.name.clone(), true),
            None => (cited.to_string(), false),
        };
        out.push(RawViolation { guideline, guideline_resolved, elements: refs, explanation: explanation.to_string() });
    }
    Ok(out)
}

/// Parses the rephrase reply: exactly `expected` objects, each with non-empty
/// `standard`, `gap` and `fix` strings.
pub fn parse_rephrase_response(raw: &str, expected: usize) -> Result<Vec<Constructive>, ParseError> {
    let items = parse_array(raw)?;
    if items.len() != expected {
        return Err(ParseError::CountMismatch { expected, got: items.len() });
    }
    items
        .iter()
        .map(|item| {
            let segment = |key: &'static str| {
                item.get(key)
                    .and_then(Value::as_str)
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .ok_or(ParseError::MissingSegment(key))
            };
            Ok(Constructive { standard: segment("standard")?, gap: segment("gap")?, fix: segment("fix")? })
        })
        .collect()
}

/// Parses the label reply, a JSON object from group id to label. Every id in
/// `expected_ids` needs a non-empty label and no other ids may appear.
pub fn parse_label_response(raw: &str, expected_ids: &[String]) -> Result<BTreeMap<String, String>, ParseError> {
    let Value::Object(map) = parse_json(raw)? else {
        return Err(unparseable("expected a JSON object", raw));
    };
    let mut labels = BTreeMap::new();
    for (id, label) in map {
        if !expected_ids.contains(&id) {
            return Err(ParseError::UnknownLabelId(id));
        }
        let label = label.as_str().ok_or_else(|| unparseable(format!("label for `{id}` must be a string"), raw))?;
        let label = label.split_whitespace().collect::<Vec<_>>().join(" ");
        if !label.is_empty() {
            labels.insert(id, label);
        }
    }
    if let Some(missing) = expected_ids.iter().find(|id| !labels.contains_key(*id)) {
        return Err(ParseError::MissingLabel(missing.clone()));
    }
    Ok(labels)
}
