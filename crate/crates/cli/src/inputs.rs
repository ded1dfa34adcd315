//! Loading designs, guideline selections and transports from user input.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use heurex_core::llm::{HttpTransport, ScriptedTransport};
use heurex_core::{parse_custom, parse_document, resolve_builtin, CompletionTransport, DesignDocument, GuidelineSet};

use crate::error::AppError;

pub fn read_file(path: &Path) -> Result<Vec<u8>, AppError> {
    std::fs::read(path).map_err(|e| AppError::io(path, e))
}

pub fn load_design(path: &Path) -> Result<DesignDocument, AppError> {
    let bytes = read_file(path)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(AppError::validation(format!("{}: design file is empty", path.display())));
    }
    parse_document(&bytes).map_err(|e| AppError::validation(format!("{}: invalid design: {e}", path.display())))
}

/// Built-in sets named in `ids` (comma-separated entries allowed), followed by
/// the custom set, if any.
pub fn select_guidelines(ids: &[String], custom: Option<GuidelineSet>) -> Result<Vec<GuidelineSet>, AppError> {
    let ids: Vec<&str> = ids.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut sets = resolve_builtin(&ids)?;
    sets.extend(custom);
    if sets.is_empty() {
        return Err(AppError::validation("select at least one guideline set"));
    }
    Ok(sets)
}

/// A `.json` file holds a full guideline set; anything else is a free-form list.
pub fn load_guideline_file(path: &Path) -> Result<GuidelineSet, AppError> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| AppError::validation(format!("{}: not UTF-8 text", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        GuidelineSet::from_json(&text)
    } else {
        parse_custom(&text)
    };
    parsed.map_err(|e| AppError::validation(format!("{}: {e}", path.display())))
}

/// Where completions come from: `scripted:<file>` replays recorded
/// responses, `http` calls the endpoint configured in the environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportSpec {
    Scripted(String),
    Http,
}

impl FromStr for TransportSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("scripted", path)) if !path.is_empty() => Ok(TransportSpec::Scripted(path.to_string())),
            _ if s == "http" => Ok(TransportSpec::Http),
            _ => Err(format!("expected `scripted:<file>` or `http`, got `{s}`")),
        }
    }
}

impl TransportSpec {
    pub fn open(&self) -> Result<Arc<dyn CompletionTransport>, AppError> {
        match self {
            TransportSpec::Scripted(path) => {
                let path = Path::new(path);
                let text = String::from_utf8(read_file(path)?)
                    .map_err(|_| AppError::validation(format!("{}: not UTF-8 text", path.display())))?;
                let scripted = ScriptedTransport::from_json(&text)
                    .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
                Ok(Arc::new(scripted))
            }
            TransportSpec::Http => Ok(Arc::new(HttpTransport::from_env()?)),
        }
    }
}
