use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use selfcal_core::explain::{dashboard, Panel, DEFAULT_GRID};
use selfcal_core::inference::step;
use selfcal_core::signals::{audio_signal, AudioClip, SpectralEmbedder};
use selfcal_core::{ActionSignal, Error, SessionState};

use crate::embed::ExternalEmbedder;
use crate::log::{parse_log, replay, session_from_header, to_ndjson, LogRecord, LOG_VERSION};
use crate::wire::{ActionBody, ActionResponse, CreateSession, ErrorBody, WireMode, WireSession};

/// Largest accepted request body; a 3 s clip at 48 kHz is about 3 MB of JSON.
pub const BODY_LIMIT: usize = 16 * 1024 * 1024;
pub const MAX_GRID: usize = 200;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory for per-session logs; logs live only in memory when unset.
    pub data_dir: Option<PathBuf>,
    /// Endpoint of an external audio embedder; the built-in spectral
    /// embedder is used when unset.
    pub embedder_url: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status_and_code(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ApiError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            ApiError::Engine(e) => match e {
                Error::InvalidConfig(_) | Error::InvalidButtonCount(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
                Error::SessionComplete => (StatusCode::CONFLICT, "session_complete"),
                Error::NoValidHypothesis => (StatusCode::CONFLICT, "no_valid_hypothesis"),
                Error::EmbedderFailure(_) => (StatusCode::BAD_GATEWAY, "embedder_failure"),
                Error::Precondition(_) | Error::InvalidState(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
                Error::MixedSignalKinds(_)
                | Error::MalformedSignal(_)
                | Error::DimensionMismatch { .. }
                | Error::TooFewPoints(_)
                | Error::EmptyClip
                | Error::SingleClass => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_signal"),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        let body = ErrorBody {
            error: code.to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

struct Entry {
    id: String,
    mode: WireMode,
    state: SessionState,
    records: Vec<LogRecord>,
    path: Option<PathBuf>,
}

impl Entry {
    /// Appends to disk first, then to memory, so both always agree.
    fn append(&mut self, records: Vec<LogRecord>) -> Result<(), ApiError> {
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| ApiError::Internal(format!("opening log: {e}")))?;
            file.write_all(to_ndjson(&records).as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| ApiError::Internal(format!("writing log: {e}")))?;
        }
        self.records.extend(records);
        Ok(())
    }

    fn wire(&self) -> WireSession {
        WireSession::new(&self.id, self.mode, &self.state)
    }
}

/// Shared service state. Sessions are independent; requests on one session
/// are serialized by its own lock.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Entry>>>>>,
    config: Arc<ServiceConfig>,
    embedder: Option<Arc<ExternalEmbedder>>,
}

impl AppState {
    /// Creates the state and restores every session log found in the data
    /// directory. Logs that fail to replay are skipped with a warning.
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let embedder = config
            .embedder_url
            .as_ref()
            .map(|url| Arc::new(ExternalEmbedder::new(url.clone())));
        let state = AppState {
            sessions: Arc::default(),
            config: Arc::new(config),
            embedder,
        };
        if let Some(dir) = &state.config.data_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_none_or(|e| e != "ndjson") {
                    continue;
                }
                let text = std::fs::read_to_string(&path)?;
                match parse_log(&text).and_then(|records| replay(&records).map(|r| (r, records))) {
                    Ok(((id, mode, session), records)) => {
                        let entry = Entry {
                            id: id.clone(),
                            mode,
                            state: session,
                            records,
                            path: Some(path),
                        };
                        state.insert(entry);
                    }
                    Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping unreadable session log"),
                }
            }
        }
        Ok(state)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    fn insert(&self, entry: Entry) {
        let id = entry.id.clone();
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(entry)));
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    async fn to_signal(&self, body: &ActionBody) -> Result<ActionSignal, ApiError> {
        match body {
            ActionBody::Audio { samples, sample_rate } => {
                let clip = AudioClip::new(samples.clone(), *sample_rate)?;
                let features = match &self.embedder {
                    Some(external) => external.audio_signal(&clip).await?,
                    None => tokio::task::spawn_blocking(move || audio_signal(&clip, &SpectralEmbedder::default()))
                        .await
                        .map_err(|e| ApiError::Internal(e.to_string()))??,
                };
                Ok(ActionSignal::Continuous { features })
            }
            other => Ok(other.to_signal()?),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/actions", post(post_action))
        .route("/sessions/{id}/dashboard", get(get_dashboard))
        .route("/sessions/{id}/log", get(get_log))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<WireSession>), ApiError> {
    let req: CreateSession = serde_json::from_slice(&body).map_err(|e| ApiError::InvalidRequest(e.to_string()))?;
    if req.button_count.is_some() && req.mode.default_buttons().is_none() {
        return Err(ApiError::InvalidRequest("button_count only applies to button modes".into()));
    }
    let seed = req.seed.unwrap_or_else(rand::random);
    let config = req.config.unwrap_or_default();
    let state = session_from_header(req.mode, req.button_count, seed, config.clone())?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let mut entry = Entry {
        id: id.clone(),
        mode: req.mode,
        records: Vec::new(),
        path: app.config.data_dir.as_ref().map(|d| d.join(format!("{id}.ndjson"))),
        state,
    };
    entry.append(vec![LogRecord::Header {
        version: LOG_VERSION,
        session_id: id,
        mode: req.mode,
        button_count: entry.state.button_count,
        seed,
        config,
    }])?;
    let wire = entry.wire();
    tracing::info!(session = %wire.session_id, mode = ?req.mode, "session created");
    app.insert(entry);
    Ok((StatusCode::CREATED, Json(wire)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<WireSession>, ApiError> {
    let entry = app.get(&id)?;
    let entry = entry.lock().await;
    Ok(Json(entry.wire()))
}

async fn post_action(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActionResponse>, ApiError> {
    let entry = app.get(&id)?;
    let mut entry = entry.lock().await;
    if entry.state.is_complete() {
        return Err(Error::SessionComplete.into());
    }
    let body = ActionBody::parse(&body)?;
    if !body.fits(entry.state.mode) {
        return Err(Error::MixedSignalKinds(format!("{:?} session cannot take this action", entry.state.mode)).into());
    }
    let signal = app.to_signal(&body).await?;
    let current = entry.state.clone();
    let consumed = signal.clone();
    let (next, decision) = tokio::task::spawn_blocking(move || step(&current, consumed))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;

    let mut records = vec![LogRecord::Action {
        step_index: entry.state.step_index,
        body,
        signal,
        coloring: *entry.state.coloring.colors(),
        scores: next.scores,
        posterior: next.posterior,
        valid: next.valid,
    }];
    if let Some(d) = &decision {
        records.push(LogRecord::Decision {
            step_index: d.step_decided,
            digit: d.digit,
            scores: d.scores_at_decision,
        });
    }
    entry.append(records)?;
    entry.state = next;
    Ok(Json(ActionResponse {
        session: entry.wire(),
        decision: decision.map(|d| d.digit),
    }))
}

#[derive(Debug, Deserialize)]
struct DashboardQuery {
    grid: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DashboardResponse {
    pub session_id: String,
    pub panels: Vec<Panel>,
}

async fn get_dashboard(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DashboardQuery>,
) -> Result<Json<DashboardResponse>, ApiError> {
    let grid = q.grid.unwrap_or(DEFAULT_GRID);
    if grid > MAX_GRID {
        return Err(ApiError::InvalidRequest(format!("grid must be at most {MAX_GRID}")));
    }
    let entry = app.get(&id)?;
    let state = entry.lock().await.state.clone();
    let panels = tokio::task::spawn_blocking(move || dashboard(&state, grid))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(DashboardResponse { session_id: id, panels }))
}

async fn get_log(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.get(&id)?;
    let text = to_ndjson(&entry.lock().await.records);
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}
