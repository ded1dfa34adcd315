//! Errors shared by the CLI and the HTTP service, with their exit codes,
//! status codes and JSON form.

use heurex_core::analysis::AnalysisError;
use heurex_core::llm::{PipelineError, Stage, TransportError};
use heurex_core::session::error_stage;
use heurex_core::{DesignError, GuidelineError, SessionError};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Bad input: a design, guideline list, config or argument.
    Validation,
    NotFound,
    AlreadyDismissed,
    /// The model endpoint failed or answered with something unusable.
    Upstream,
    Io,
    Internal,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct AppError {
    pub kind: ErrorKind,
    pub message: String,
    pub stage: Option<Stage>,
}

impl AppError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        AppError { kind, message: message.into(), stage: None }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::NotFound, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, format!("{}: {e}", path.display()))
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::NotFound => 3,
            ErrorKind::AlreadyDismissed => 4,
            ErrorKind::Upstream => 5,
            ErrorKind::Io => 6,
            ErrorKind::Internal => 70,
        }
    }

    /// HTTP status code for the service.
    pub fn status(&self) -> u16 {
        match self.kind {
            ErrorKind::Validation => 400,
            ErrorKind::NotFound => 404,
            ErrorKind::AlreadyDismissed => 409,
            ErrorKind::Upstream => 502,
            ErrorKind::Io | ErrorKind::Internal => 500,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut error = json!({"kind": self.kind, "message": self.message});
        if let Some(stage) = self.stage {
            error["stage"] = json!(stage);
        }
        json!({ "error": error })
    }
}

impl From<DesignError> for AppError {
    fn from(e: DesignError) -> Self {
        AppError::validation(format!("invalid design: {e}"))
    }
}

impl From<GuidelineError> for AppError {
    fn from(e: GuidelineError) -> Self {
        AppError::validation(e.to_string())
    }
}

impl From<AnalysisError> for AppError {
    fn from(e: AnalysisError) -> Self {
        AppError::validation(e.to_string())
    }
}

impl From<TransportError> for AppError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Config(_) => AppError::validation(e.to_string()),
            _ => AppError::new(ErrorKind::Upstream, e.to_string()),
        }
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        let kind = match &e {
            PipelineError::BudgetExceeded { .. } | PipelineError::InvalidRequest(_) => ErrorKind::Validation,
            PipelineError::Transport { source: TransportError::Config(_), .. } => ErrorKind::Validation,
            PipelineError::Transport { .. } | PipelineError::Parse { .. } => ErrorKind::Upstream,
        };
        AppError { kind, message: e.to_string(), stage: e.stage() }
    }
}

impl From<SessionError> for AppError {
    fn from(e: SessionError) -> Self {
        let stage = error_stage(&e);
        match e {
            SessionError::Pipeline(p) => p.into(),
            SessionError::NoGuidelines | SessionError::InvalidBudget | SessionError::InvalidConfig(_) => {
                AppError::validation(e.to_string())
            }
            SessionError::UnknownSuggestion(_) => AppError::not_found(e.to_string()),
            SessionError::AlreadyDismissed(_) => AppError { kind: ErrorKind::AlreadyDismissed, message: e.to_string(), stage },
            SessionError::VersionMismatch { .. } | SessionError::CorruptState(_) => AppError::validation(e.to_string()),
        }
    }
}
