//! JSON-over-HTTP service for persona chat sessions.
//!
//! Every acknowledged turn is appended to the session's file under the data
//! directory before the response is sent, and sessions are rebuilt from
//! those files at startup.

pub mod store;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use persona_core::orchestrator::{
    trajectory_csv, trajectory_rows, AxisScore, Backends, Scenario, Session, StateSnapshot,
    TurnError, TurnTrace,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

pub use store::{SessionHeader, SessionLog, StoreError};

/// A loaded scenario with the backends its sessions use.
#[derive(Debug, Clone)]
pub struct ScenarioEntry {
    pub scenario: Arc<Scenario>,
    pub backends: Backends,
}

impl ScenarioEntry {
    pub fn new(scenario: Scenario, backends: Backends) -> Self {
        Self {
            scenario: Arc::new(scenario),
            backends,
        }
    }
}

struct SessionEntry {
    header: SessionHeader,
    backends: Backends,
    /// Held for the whole turn; a second writer gets a busy error.
    log: Arc<Mutex<SessionLog>>,
    /// Only ever holds turn-boundary state.
    session: RwLock<Session>,
}

pub struct AppState {
    data_dir: PathBuf,
    scenarios: Vec<ScenarioEntry>,
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error("creating data directory {path}: {source}")]
    DataDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("duplicate scenario `{0}`")]
    DuplicateScenario(String),
}

impl AppState {
    /// Opens the data directory and restores every session found in it.
    /// Files that cannot be restored are logged and skipped.
    pub fn open(data_dir: impl Into<PathBuf>, scenarios: Vec<ScenarioEntry>) -> Result<Arc<Self>, OpenError> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir).map_err(|source| OpenError::DataDir {
            path: data_dir.clone(),
            source,
        })?;
        for (i, s) in scenarios.iter().enumerate() {
            if scenarios[..i].iter().any(|o| o.scenario.scenario_id == s.scenario.scenario_id) {
                return Err(OpenError::DuplicateScenario(s.scenario.scenario_id.clone()));
            }
        }
        let state = Self {
            data_dir,
            scenarios,
            sessions: RwLock::new(HashMap::new()),
        };
        state.restore_all();
        Ok(Arc::new(state))
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn scenario(&self, id: &str) -> Option<&ScenarioEntry> {
        self.scenarios.iter().find(|s| s.scenario.scenario_id == id)
    }

    fn restore_all(&self) {
        let Ok(dir) = std::fs::read_dir(&self.data_dir) else {
            return;
        };
        let mut paths: Vec<PathBuf> = dir
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut sessions = self.sessions.write().unwrap();
        for path in paths {
            match self.restore_one(&path) {
                Ok(entry) => {
                    tracing::info!(
                        session = %entry.header.session_id,
                        turns = entry.session.read().unwrap().turns().len(),
                        "restored session"
                    );
                    sessions.insert(entry.header.session_id.clone(), Arc::new(entry));
                }
                Err(e) => tracing::error!(path = %path.display(), "skipping session file: {e}"),
            }
        }
    }

    fn restore_one(&self, path: &Path) -> anyhow::Result<SessionEntry> {
        let (log, header, turns) = SessionLog::open(path)?;
        let Some(scenario) = self.scenario(&header.scenario_id) else {
            anyhow::bail!("unknown scenario `{}`", header.scenario_id);
        };
        let session = Session::restore(scenario.scenario.clone(), header.seed, turns)?;
        Ok(SessionEntry {
            backends: scenario.backends.clone(),
            header,
            log: Arc::new(Mutex::new(log)),
            session: RwLock::new(session),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<SessionEntry>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/scenarios", get(list_scenarios))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/trajectory.csv", get(get_trajectory))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<TurnError> for ApiError {
    fn from(e: TurnError) -> Self {
        match e {
            TurnError::EmptyMessage => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_message", e.to_string()),
            TurnError::Analyzer(_) | TurnError::Generation(_) => {
                Self::new(StatusCode::BAD_GATEWAY, "backend_failed", e.to_string())
            }
            TurnError::Axis { .. } | TurnError::Setup(_) => Self::internal(e.to_string()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AxisSummary {
    pub name: String,
    pub states: usize,
    pub default_state: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub axes: Vec<AxisSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub title: String,
    pub user_model: String,
    pub assistant_model: String,
    pub models: Vec<ModelSummary>,
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Json<Vec<ScenarioSummary>> {
    let list = state
        .scenarios
        .iter()
        .map(|e| {
            let s = &e.scenario;
            ScenarioSummary {
                scenario_id: s.scenario_id.clone(),
                title: s.title.clone(),
                user_model: s.user_model.clone(),
                assistant_model: s.assistant_model.clone(),
                models: s
                    .models
                    .iter()
                    .map(|m| ModelSummary {
                        name: m.name.clone(),
                        axes: m
                            .axes
                            .iter()
                            .map(|a| AxisSummary {
                                name: a.name.clone(),
                                states: a.config.states,
                                default_state: a.config.default_state,
                            })
                            .collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    Json(list)
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub scenario_id: String,
    #[serde(default)]
    pub dev_mode: bool,
    pub seed: Option<u64>,
}

/// Session record as returned by the API.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    #[serde(flatten)]
    pub header: SessionHeader,
    pub turns: usize,
    pub snapshot: StateSnapshot,
}

fn info(entry: &SessionEntry) -> SessionInfo {
    let session = entry.session.read().unwrap();
    SessionInfo {
        header: entry.header.clone(),
        turns: session.turns().len(),
        snapshot: session.snapshot(),
    }
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let scenario = state
        .scenario(&req.scenario_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown scenario `{}`", req.scenario_id)))?
        .clone();
    let id = uuid::Uuid::new_v4();
    let header = SessionHeader {
        session_id: id.simple().to_string(),
        scenario_id: req.scenario_id,
        created_at: Utc::now(),
        dev_mode: req.dev_mode,
        seed: req.seed.unwrap_or_else(|| id.as_u64_pair().0),
    };
    let session = Session::new(scenario.scenario.clone(), header.seed)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let dir = state.data_dir.clone();
    let h = header.clone();
    let log = tokio::task::spawn_blocking(move || SessionLog::create(&dir, &h))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let entry = Arc::new(SessionEntry {
        header,
        backends: scenario.backends,
        log: Arc::new(Mutex::new(log)),
        session: RwLock::new(session),
    });
    tracing::info!(session = %entry.header.session_id, scenario = %entry.header.scenario_id, "created session");
    state
        .sessions
        .write()
        .unwrap()
        .insert(entry.header.session_id.clone(), entry.clone());
    Ok((StatusCode::CREATED, Json(info(&entry))))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    let entry = state.session(&id)?;
    Ok(Json(info(&entry)))
}

#[derive(Debug, Deserialize)]
pub struct PostMessage {
    pub text: String,
}

/// Reply to a user message. Scores and snapshot are only present for
/// sessions created with `dev_mode`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turn: u32,
    pub assistant_reply: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<AxisScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<StateSnapshot>,
}

async fn post_message(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<PostMessage>,
) -> Result<Json<TurnResponse>, ApiError> {
    let entry = state.session(&id)?;
    let log = entry.log.clone().try_lock_owned().map_err(|_| {
        ApiError::new(
            StatusCode::CONFLICT,
            "session_busy",
            "a message for this session is still being processed; retry later",
        )
    })?;
    let worker = entry.clone();
    let (trace, snapshot) = tokio::task::spawn_blocking(move || {
        let mut log = log;
        let pending = {
            let session = worker.session.read().unwrap();
            session.prepare_turn(&worker.backends, &req.text)?
        };
        log.append(&pending.trace)
            .map_err(|e| ApiError::internal(format!("persisting turn: {e}")))?;
        let trace = pending.trace.clone();
        let mut session = worker.session.write().unwrap();
        session.commit(pending);
        Ok::<_, ApiError>((trace, session.snapshot()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    tracing::debug!(session = %id, turn = trace.turn, "turn committed");
    let dev = entry.header.dev_mode;
    Ok(Json(TurnResponse {
        turn: trace.turn,
        assistant_reply: trace.assistant_reply,
        scores: dev.then_some(trace.scores),
        snapshot: dev.then_some(snapshot),
    }))
}

async fn get_state(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<StateSnapshot>, ApiError> {
    let entry = state.session(&id)?;
    let snapshot = entry.session.read().unwrap().snapshot();
    Ok(Json(snapshot))
}

async fn get_transcript(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Vec<TurnTrace>>, ApiError> {
    let entry = state.session(&id)?;
    let turns = entry.session.read().unwrap().turns().to_vec();
    Ok(Json(turns))
}

async fn get_trajectory(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let entry = state.session(&id)?;
    let csv = {
        let session = entry.session.read().unwrap();
        let rows = trajectory_rows(session.scenario(), session.turns())
            .map_err(|e| ApiError::internal(e.to_string()))?;
        trajectory_csv(&rows)
    };
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
