//! JSON over HTTP.
//!
//! | method | path                          | body / query                          |
//! |--------|-------------------------------|---------------------------------------|
//! | POST   | `/sessions`                   | [`CreateSessionRequest`]              |
//! | GET    | `/sessions/{id}/next`         | `?judge=<judge id>`                   |
//! | POST   | `/sessions/{id}/judgments`    | [`SubmitRequest`]                     |
//! | GET    | `/sessions/{id}/progress`     |                                       |
//! | GET    | `/sessions/{id}/results`      | unblinded; for the experimenter only  |
//!
//! Errors are `{"error": "<message>"}` with status 400, 404 or 500.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use qa_core::data_io::RunFile;

use crate::error::Error;
use crate::results::ResultsReport;
use crate::service::{AssessService, NewSession, DEFAULT_K};
use crate::types::{Ack, NextItem, SessionProgress};

/// Runs are TREC run text; `sentences` maps sentence keys to text and
/// `questions` maps question ids to question text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub run_a: String,
    pub run_b: String,
    pub sentences: BTreeMap<String, String>,
    pub questions: BTreeMap<String, String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shuffle: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub questions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub judge_id: String,
    pub question_id: String,
    pub verdict: String,
}

#[derive(Debug, Deserialize)]
struct JudgeQuery {
    judge: String,
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownSession(_) | Error::UnknownQuestion(_) => StatusCode::NOT_FOUND,
            Error::InvalidVerdict(_) | Error::InvalidRequest(_) | Error::Core(_) => StatusCode::BAD_REQUEST,
            Error::Io { .. } | Error::Journal { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type Shared = State<Arc<AssessService>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::InvalidRequest(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn create(State(svc): Shared, Json(req): Json<CreateSessionRequest>) -> ApiResult<CreateSessionResponse> {
    let new = NewSession {
        run_a: RunFile::parse(&req.run_a, Path::new("run_a")).map_err(Error::from)?,
        run_b: RunFile::parse(&req.run_b, Path::new("run_b")).map_err(Error::from)?,
        sentences: req.sentences,
        questions: req.questions,
        k: req.k.unwrap_or(DEFAULT_K),
        seed: req.seed.unwrap_or(0),
        shuffle: req.shuffle.unwrap_or(true),
    };
    let session = blocking(move || svc.create_session(new)).await?;
    Ok(Json(CreateSessionResponse { session_id: session.id.clone(), questions: session.questions.len() }))
}

async fn next(State(svc): Shared, UrlPath(id): UrlPath<String>, Query(q): Query<JudgeQuery>) -> ApiResult<NextItem> {
    Ok(Json(svc.next_item(&id, &q.judge)?))
}

async fn submit(State(svc): Shared, UrlPath(id): UrlPath<String>, Json(req): Json<SubmitRequest>) -> ApiResult<Ack> {
    let ack = blocking(move || svc.submit_judgment(&id, &req.judge_id, &req.question_id, &req.verdict)).await?;
    Ok(Json(ack))
}

async fn progress(State(svc): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<SessionProgress> {
    Ok(Json(svc.progress(&id)?))
}

async fn results(State(svc): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<ResultsReport> {
    Ok(Json(svc.results(&id)?))
}

pub fn router(service: Arc<AssessService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/judgments", post(submit))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/results", get(results))
        .with_state(service)
}

/// Serve until the process is stopped.
pub async fn serve(addr: SocketAddr, service: Arc<AssessService>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}
