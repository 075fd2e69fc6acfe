//! HTTP session API (JSON bodies, schema version in every response).
//!
//! | method | path                         | body                       | reply                 |
//! |--------|------------------------------|----------------------------|-----------------------|
//! | POST   | `/v1/sessions`               | [`CreateSessionRequest`]   | 201 [`CreatedSession`] |
//! | POST   | `/v1/sessions/{id}/answers`  | [`AnswerRequest`]          | 200 turn result       |
//! | GET    | `/v1/sessions/{id}/trace`    |                            | 200 session trace     |
//! | GET    | `/v1/health`                 |                            | 200                   |
//!
//! Errors reply `{"schema_version": 1, "error": {"code": ..., "message": ...}}`
//! with codes `bad_request` (400), `session_not_found` (404),
//! `session_closed` (409), `validation_error` and `unparseable_answer`
//! (422), `internal_error` (500).

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::manager::SessionManager;
use super::session::{DialogError, TurnResult};
use super::trace::{SessionTrace, SCHEMA_VERSION};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub rule_text: String,
    #[serde(default)]
    pub scenario: String,
    pub question: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnswerRequest {
    /// "yes"/"no" or free text containing a yes/no keyword.
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub schema_version: u32,
    pub session_id: String,
    pub turn: TurnResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TurnReply {
    schema_version: u32,
    #[serde(flatten)]
    turn: TurnResult,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl From<DialogError> for ApiError {
    fn from(e: DialogError) -> Self {
        let status = match &e {
            DialogError::Validation(_) | DialogError::Unparseable(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            DialogError::Closed(_) => StatusCode::CONFLICT,
            DialogError::NotFound(_) => StatusCode::NOT_FOUND,
            DialogError::Model(_) | DialogError::Rephrase(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        Self {
            status,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: e.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": {"code": self.code, "message": self.message},
        });
        (self.status, Json(body)).into_response()
    }
}

type Shared = State<Arc<SessionManager>>;

async fn create(
    State(m): Shared,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreatedSession>), ApiError> {
    let Json(req) = body?;
    let turn = m.start(&req.rule_text, &req.scenario, &req.question)?;
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            schema_version: SCHEMA_VERSION,
            session_id: turn.session_id.clone(),
            turn,
        }),
    ))
}

async fn answer(
    State(m): Shared,
    Path(id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<TurnReply>, ApiError> {
    let Json(req) = body?;
    let turn = m.answer_text(&id, &req.answer)?;
    Ok(Json(TurnReply {
        schema_version: SCHEMA_VERSION,
        turn,
    }))
}

async fn trace(State(m): Shared, Path(id): Path<String>) -> Result<Json<SessionTrace>, ApiError> {
    Ok(Json(m.trace(&id)?))
}

async fn health(State(m): Shared) -> Json<serde_json::Value> {
    Json(json!({"schema_version": SCHEMA_VERSION, "status": "ok", "sessions": m.len()}))
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/:id/answers", post(answer))
        .route("/v1/sessions/:id/trace", get(trace))
        .route("/v1/health", get(health))
        .with_state(manager)
}

pub async fn serve(addr: SocketAddr, manager: Arc<SessionManager>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("session API listening on {}", listener.local_addr()?);
    axum::serve(listener, router(manager)).await
}
