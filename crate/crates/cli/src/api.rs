//! HTTP API under `/api/v1`. Every handler delegates to [`SessionStore`];
//! no pipeline logic lives here.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use viewdisc::present::{Choice, SessionError};
use viewdisc::service::SessionStore;
use viewdisc::{Error, QueryView};

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::Session(SessionError::UnknownSession(_)) => StatusCode::NOT_FOUND,
            Error::Session(SessionError::StalePrompt { .. } | SessionError::NoPrompt | SessionError::EmptyResult) => {
                StatusCode::CONFLICT
            }
            Error::Session(_) | Error::QueryView(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/:id", get(session_status))
        .route("/api/v1/sessions/:id/views", get(session_views))
        .route("/api/v1/sessions/:id/prompt", get(session_prompt))
        .route("/api/v1/sessions/:id/choice", post(session_choice))
        .route("/api/v1/sessions/:id/export", get(session_export))
        .route("/api/v1/attributes", get(attributes))
        .with_state(store)
}

#[derive(Serialize)]
struct Created {
    session_id: String,
}

/// Body: a query view document, `{"attributes": [...], "tuples": [{...}]}`.
async fn create_session(State(store): State<Arc<SessionStore>>, body: String) -> ApiResult<Response> {
    let qv = QueryView::parse(&body)?;
    let id = store.create(qv)?;
    let s = store.clone();
    let run_id = id.clone();
    tokio::task::spawn_blocking(move || {
        if let Err(e) = s.run(&run_id) {
            log::warn!("session {run_id} failed: {e}");
        }
    });
    Ok((StatusCode::ACCEPTED, Json(Created { session_id: id })).into_response())
}

async fn session_status(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(store.status(&id)?).into_response())
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    page: usize,
}

async fn session_views(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<PageQuery>,
) -> ApiResult<Response> {
    Ok(Json(json!({ "views": store.views(&id, q.page)? })).into_response())
}

async fn session_prompt(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(json!({ "prompt": store.prompt(&id)? })).into_response())
}

/// `{"prompt_id": "p0", "chosen": "<view id>"}` or `{"prompt_id": "p0", "skip": true}`.
#[derive(Deserialize)]
struct ChoiceBody {
    prompt_id: String,
    chosen: Option<String>,
    #[serde(default)]
    skip: bool,
}

async fn session_choice(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Result<Json<ChoiceBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body.map_err(|e| Error::QueryView(format!("choice body: {e}")))?;
    let choice = match (body.chosen, body.skip) {
        (Some(v), false) => Choice::View(v),
        (None, true) => Choice::Skip,
        _ => return Err(Error::QueryView("choice body: give exactly one of `chosen` or `skip`".into()).into()),
    };
    Ok(Json(store.choose(&id, &body.prompt_id, &choice)?).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    view: Option<String>,
}

async fn session_export(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let csv = store.export(&id, q.view.as_deref())?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

#[derive(Deserialize)]
struct PrefixQuery {
    #[serde(default)]
    prefix: String,
}

async fn attributes(State(store): State<Arc<SessionStore>>, Query(q): Query<PrefixQuery>) -> Response {
    Json(json!({ "attributes": store.index().complete_attribute(&q.prefix) })).into_response()
}
