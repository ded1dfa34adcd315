//! HTTP session API.
//!
//! | Method | Path | Result |
//! |---|---|---|
//! | POST | `/sessions` | 201 `{"session_id"}` |
//! | GET | `/sessions/{id}` | session state with a report per round |
//! | POST | `/sessions/{id}/rounds` | report of the new round |
//! | GET | `/sessions/{id}/rounds/{n}` | report of round `n`; `?format=markdown` for Markdown |
//! | POST | `/sessions/{id}/suggestions/{sid}/dismiss` | 200 `{"dismissed", "round"}` |
//! | GET | `/guidelines` | built-in guideline sets |
//! | POST | `/labels` | group id to suggested name |
//!
//! Errors are `{"error": {"kind", "message", "stage"?}}` with 400, 404, 409
//! or 502. Each session has its own lock, so requests on one session run one
//! at a time while other sessions proceed.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use heurex_core::condenser::CondenseOptions;
use heurex_core::llm::{generate_labels, SuggestionId};
use heurex_core::{
    builtin_sets, create_session, parse_custom, parse_document, render_report_markdown, CompletionParams,
    CompletionTransport, DesignDocument, Engine, Report, SessionState,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{AppError, ErrorKind};
use crate::inputs::select_guidelines;

type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

struct Inner {
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
    next_id: AtomicU64,
    transport: Arc<dyn CompletionTransport>,
    config: Config,
    params: CompletionParams,
    clock: Clock,
    state_dir: OnceLock<PathBuf>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Model parameters come from `config` and `HEUREX_MODEL`; timestamps
    /// from the system clock.
    pub fn new(transport: Arc<dyn CompletionTransport>, config: Config) -> Self {
        let params = config.params_from_env();
        let clock = || SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self::with_parts(transport, config, params, clock)
    }

    pub fn with_parts(
        transport: Arc<dyn CompletionTransport>,
        config: Config,
        params: CompletionParams,
        clock: impl Fn() -> u64 + Send + Sync + 'static,
    ) -> Self {
        AppState(Arc::new(Inner {
            sessions: Mutex::default(),
            next_id: AtomicU64::new(1),
            transport,
            config,
            params,
            clock: Arc::new(clock),
            state_dir: OnceLock::new(),
        }))
    }

    /// Loads the sessions saved in `dir` and saves every later change there.
    pub fn persist_to(&self, dir: &Path) -> Result<(), AppError> {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| AppError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        entries.sort();
        let mut sessions = lock(&self.0.sessions);
        for path in entries {
            let bytes = std::fs::read(&path).map_err(|e| AppError::io(&path, e))?;
            let state = SessionState::load(&bytes)
                .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
            if let Some(n) = state.session_id.strip_prefix("session-").and_then(|n| n.parse::<u64>().ok()) {
                self.0.next_id.fetch_max(n + 1, Ordering::SeqCst);
            }
            sessions.insert(state.session_id.clone(), Arc::new(Mutex::new(state)));
        }
        self.0
            .state_dir
            .set(dir.to_path_buf())
            .map_err(|_| AppError::new(ErrorKind::Internal, "state directory already set"))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, AppError> {
        lock(&self.0.sessions).get(id).cloned().ok_or_else(|| AppError::not_found(format!("unknown session `{id}`")))
    }

    fn save(&self, state: &SessionState) -> Result<(), AppError> {
        let Some(dir) = self.0.state_dir.get() else { return Ok(()) };
        let path = dir.join(format!("{}.json", state.session_id));
        let tmp = dir.join(format!(".{}.json.tmp", state.session_id));
        std::fs::write(&tmp, state.save()).map_err(|e| AppError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| AppError::io(&path, e))
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.to_json())).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/rounds", post(run_round))
        .route("/sessions/{id}/rounds/{n}", get(show_round))
        .route("/sessions/{id}/suggestions/{sid}/dismiss", post(dismiss))
        .route("/guidelines", get(guidelines))
        .route("/labels", post(labels))
        .with_state(state)
}

/// Parses a JSON body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, AppError> {
    let bytes = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| AppError::validation(format!("invalid request body: {e}")))
}

fn design(value: &Value) -> Result<DesignDocument, AppError> {
    let bytes = serde_json::to_vec(value).expect("JSON values serialize");
    Ok(parse_document(&bytes)?)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, AppError> + Send + 'static) -> Result<T, AppError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| AppError::new(ErrorKind::Internal, e.to_string()))?
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    design: Value,
    #[serde(default)]
    guidelines: Vec<String>,
    /// Free-form guideline list, used alongside or instead of `guidelines`.
    #[serde(default)]
    custom_guidelines: Option<String>,
    #[serde(default)]
    engine: Option<String>,
    #[serde(default)]
    budget: Option<usize>,
}

async fn create(State(app): State<AppState>, bytes: Bytes) -> Result<(StatusCode, Json<Value>), AppError> {
    let req: CreateRequest = body(&bytes)?;
    let doc = design(&req.design)?;
    let custom = req.custom_guidelines.as_deref().map(parse_custom).transpose()?;
    let sets = select_guidelines(&req.guidelines, custom)?;
    let engine = match req.engine.as_deref() {
        None => Engine::Llm,
        Some(s) => Engine::parse(s).ok_or_else(|| AppError::validation(format!("unknown engine `{s}`")))?,
    };
    let n = app.0.next_id.fetch_add(1, Ordering::SeqCst);
    let id = format!("session-{n}");
    let mut session = create_session(&id, doc, sets, engine, None)?;
    app.0.config.apply(&mut session, app.0.params.clone());
    if let Some(budget) = req.budget {
        if budget == 0 {
            return Err(AppError::validation("token budget must be positive"));
        }
        session.budget = budget;
    }
    app.save(&session)?;
    lock(&app.0.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

#[derive(Serialize)]
struct SessionView<'a> {
    #[serde(flatten)]
    state: &'a SessionState,
    reports: Vec<Report>,
}

async fn show(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, AppError> {
    let session = app.session(&id)?;
    let state = lock(&session);
    let reports = state.rounds.iter().map(|r| Report::from_round(&state.session_id, state.engine, r)).collect();
    let view = serde_json::to_value(SessionView { state: &state, reports }).expect("session serializes");
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundRequest {
    #[serde(default)]
    design: Option<Value>,
}

async fn run_round(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> Result<Json<Report>, AppError> {
    let req: RoundRequest = body(&bytes)?;
    let updated = req.design.as_ref().map(design).transpose()?;
    let session = app.session(&id)?;
    let report = blocking(move || {
        let mut state = lock(&session);
        state.run_round(updated, &app.0.transport)?;
        app.save(&state)?;
        Ok(Report::latest(&state).expect("a round just ran"))
    })
    .await?;
    Ok(Json(report))
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn show_round(
    State(app): State<AppState>,
    UrlPath((id, n)): UrlPath<(String, u32)>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, AppError> {
    let session = app.session(&id)?;
    let report = Report::for_round(&lock(&session), n).ok_or_else(|| AppError::not_found(format!("no round {n}")))?;
    Ok(match q.format.as_deref() {
        Some("markdown") => {
            ([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], render_report_markdown(&report)).into_response()
        }
        None | Some("json") => Json(report).into_response(),
        Some(other) => return Err(AppError::validation(format!("unknown format `{other}`"))),
    })
}

async fn dismiss(
    State(app): State<AppState>,
    UrlPath((id, sid)): UrlPath<(String, String)>,
) -> Result<Json<Value>, AppError> {
    let session = app.session(&id)?;
    let mut state = lock(&session);
    let record = state.dismiss(&SuggestionId(sid), (app.0.clock)())?.clone();
    app.save(&state)?;
    Ok(Json(json!({"dismissed": record.suggestion_id, "round": record.round})))
}

async fn guidelines() -> Json<Value> {
    Json(serde_json::to_value(builtin_sets()).expect("guideline sets serialize"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsRequest {
    design: Value,
}

async fn labels(State(app): State<AppState>, bytes: Bytes) -> Result<Json<BTreeMap<String, String>>, AppError> {
    let req: LabelsRequest = body(&bytes)?;
    let doc = design(&req.design)?;
    let names = blocking(move || {
        Ok(generate_labels(&doc, &app.0.transport, &app.0.params, CondenseOptions::default())?)
    })
    .await?;
    Ok(Json(names))
}
