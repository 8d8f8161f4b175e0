//! HTTP+JSON front end. Schemas are documented in docs/protocol.md.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use morai_core::agent::{AgentError, Reuse};
use morai_core::explain::Explanation;
use morai_core::TileId;

use crate::manager::SessionManager;
use crate::session::{EditRequest, Session, SessionConfig};
use crate::{SessionError, PROTOCOL_VERSION};

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/version", get(version))
        .route("/session", post(create_session))
        .route("/session/{id}/edits", post(submit_edits))
        .route("/session/{id}/end-turn", post(end_turn))
        .route("/session/{id}/remove-ai-turn", post(remove_ai_turn))
        .route("/session/{id}/reset-level", post(reset_level))
        .route("/session/{id}/close", post(close_session))
        .route("/session/{id}/level", get(level))
        .route("/session/{id}/log", get(log))
        .with_state(manager)
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match &self.0 {
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::SessionClosed | SessionError::NothingToRemove => StatusCode::CONFLICT,
            SessionError::BadConfig(_)
            | SessionError::BadCheckpoint(_)
            | SessionError::Level(_)
            | SessionError::MalformedLog(_)
            | SessionError::Json(_) => StatusCode::BAD_REQUEST,
            SessionError::Agent(AgentError::BadConfig(_) | AgentError::BadCheckpoint(_) | AgentError::Level(_)) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match &self.0 {
            SessionError::SessionClosed => "session_closed",
            SessionError::NothingToRemove => "nothing_to_remove",
            SessionError::BadConfig(_) => "bad_config",
            SessionError::BadCheckpoint(_) => "bad_checkpoint",
            SessionError::NotFound(_) => "not_found",
            SessionError::Poisoned => "poisoned",
            SessionError::MalformedLog(_) => "malformed_log",
            SessionError::Level(_) => "invalid_edit",
            SessionError::Agent(_) => "agent",
            SessionError::Io(_) => "io",
            SessionError::Json(_) => "bad_request",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(json!({ "error": self.code(), "message": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a session operation off the async executor; agent work is CPU-bound.
async fn blocking<R: Send + 'static>(
    manager: Arc<SessionManager>,
    id: String,
    f: impl FnOnce(&mut Session) -> Result<R, SessionError> + Send + 'static,
) -> ApiResult<R> {
    tokio::task::spawn_blocking(move || manager.with_session(&id, f))
        .await
        .map_err(|_| ApiError(SessionError::Poisoned))?
        .map_err(ApiError)
}

async fn version(State(manager): State<Arc<SessionManager>>) -> Json<Value> {
    Json(json!({
        "protocol_version": PROTOCOL_VERSION,
        "tile_manifest_version": manager.manifest().version(),
        "service": env!("CARGO_PKG_VERSION"),
    }))
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    #[serde(default)]
    config: Value,
    #[serde(default)]
    session_id: Option<String>,
}

/// Fields present in the request override the service defaults.
fn merge_config(defaults: &SessionConfig, overrides: Value) -> Result<SessionConfig, SessionError> {
    let mut base = serde_json::to_value(defaults)?;
    match overrides {
        Value::Null => {}
        Value::Object(fields) => {
            let obj = base.as_object_mut().expect("config serializes to an object");
            obj.extend(fields);
        }
        _ => return Err(SessionError::BadConfig("config must be a JSON object".into())),
    }
    serde_json::from_value(base).map_err(|e| SessionError::BadConfig(e.to_string()))
}

async fn create_session(
    State(manager): State<Arc<SessionManager>>,
    body: Option<Json<CreateRequest>>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let config = merge_config(manager.defaults(), req.config)?;
    let id = tokio::task::spawn_blocking(move || match req.session_id {
        Some(id) => manager.create_with_id(id, config),
        None => manager.create(config),
    })
    .await
    .map_err(|_| ApiError(SessionError::Poisoned))??;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditsRequest {
    edits: Vec<EditRequest>,
}

async fn submit_edits(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Json(req): Json<EditsRequest>,
) -> ApiResult<Json<Value>> {
    let turn_id = blocking(manager, id, move |s| s.submit_human_edits(&req.edits)).await?;
    Ok(Json(json!({ "ok": true, "turn_id": turn_id })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndTurnRequest {
    focus_x: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AdditionView {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    pub activation: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EndTurnResponse {
    pub turn_id: u64,
    pub additions: Vec<AdditionView>,
    pub explanations: Vec<Explanation>,
}

async fn end_turn(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    Json(req): Json<EndTurnRequest>,
) -> ApiResult<Json<EndTurnResponse>> {
    let turn = blocking(manager, id, move |s| s.end_turn(req.focus_x)).await?;
    let additions = turn
        .additions
        .iter()
        .zip(&turn.activations)
        .map(|(e, &activation)| AdditionView { x: e.x, y: e.y, tile: e.tile, activation })
        .collect();
    Ok(Json(EndTurnResponse { turn_id: turn.turn_id, additions, explanations: turn.explanations }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
}

async fn remove_ai_turn(State(manager): State<Arc<SessionManager>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let removed = blocking(manager, id, |s| s.remove_last_ai_turn()).await?;
    let removed: Vec<Cell> = removed.iter().map(|e| Cell { x: e.x, y: e.y, tile: e.tile }).collect();
    Ok(Json(json!({ "removed": removed })))
}

async fn reset_level(State(manager): State<Arc<SessionManager>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    blocking(manager, id, |s| s.reset_level()).await?;
    Ok(Json(json!({ "ok": true })))
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CloseRequest {
    #[serde(default)]
    reuse_ranking: Option<Reuse>,
}

async fn close_session(
    State(manager): State<Arc<SessionManager>>,
    Path(id): Path<String>,
    body: Option<Json<CloseRequest>>,
) -> ApiResult<Json<Value>> {
    let ranking = body.map(|Json(b)| b).unwrap_or_default().reuse_ranking;
    let dir = manager.sessions_dir().map(ToOwned::to_owned);
    let path = blocking(manager, id, move |s| s.close(ranking, dir.as_deref())).await?;
    Ok(Json(json!({ "log_path": path.map(|p| p.display().to_string()) })))
}

async fn level(State(manager): State<Arc<SessionManager>>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = blocking(manager, id, |s| Ok(s.level_text())).await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn log(State(manager): State<Arc<SessionManager>>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = blocking(manager, id, |s| Ok(s.export_log())).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}
