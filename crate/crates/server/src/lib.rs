//! HTTP front end for interactive selection sessions: create a session over
//! a catalog, patch its requirements and preferences, evaluate, and fetch
//! results by revision.
//!
//! Endpoints:
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/catalogs` | | catalog ids |
//! | GET | `/catalogs/{id}` | | catalog document |
//! | POST | `/sessions` | `catalog_id` | session (201) |
//! | GET | `/sessions/{id}` | | session |
//! | PATCH | `/sessions/{id}` | partial session document | session |
//! | POST | `/sessions/{id}/evaluate` | | result of the current revision |
//! | GET | `/sessions/{id}/results` | | latest result, flagged if stale |
//! | GET | `/sessions/{id}/results/{revision}` | | result of that revision |

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use cloudsel::codes::ErrorCode;
use serde::Serialize;
use tokio::net::TcpListener;

pub mod state;
pub mod wire;

pub use state::{AppState, CatalogList, CreateSession, ResultEnvelope, SessionPatch, SessionView};
pub use wire::{ApiError, ErrorBody, Format};

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/catalogs", get(list_catalogs))
        .route("/catalogs/{id}", get(get_catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).patch(patch_session))
        .route("/sessions/{id}/evaluate", post(evaluate))
        .route("/sessions/{id}/results", get(latest_result))
        .route("/sessions/{id}/results/{revision}", get(result_at))
        .fallback(unknown_route)
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Runs engine work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| {
        Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Evaluation, format!("worker failed: {e}")))
    })
}

fn ok<T: Serialize>(headers: &HeaderMap, result: Result<T, ApiError>) -> Response {
    wire::reply(headers, StatusCode::OK, result)
}

async fn list_catalogs(State(app): Shared, headers: HeaderMap) -> Response {
    ok(&headers, Ok(app.catalog_ids()))
}

async fn get_catalog(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Response {
    ok(&headers, app.catalog_document(&id))
}

async fn create_session(State(app): Shared, headers: HeaderMap, body: Bytes) -> Response {
    let result = match wire::decode::<CreateSession>(&headers, &body) {
        Ok(req) => blocking(move || app.create_session(req)).await,
        Err(e) => Err(e),
    };
    wire::reply(&headers, StatusCode::CREATED, result)
}

async fn get_session(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Response {
    ok(&headers, blocking(move || app.session_view(&id)).await)
}

async fn patch_session(State(app): Shared, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let result = match wire::decode::<SessionPatch>(&headers, &body) {
        Ok(patch) => blocking(move || app.update_session(&id, patch)).await,
        Err(e) => Err(e),
    };
    ok(&headers, result)
}

async fn evaluate(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Response {
    ok(&headers, blocking(move || app.evaluate(&id)).await)
}

async fn latest_result(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Response {
    ok(&headers, blocking(move || app.latest_result(&id)).await)
}

async fn result_at(State(app): Shared, Path((id, revision)): Path<(String, String)>, headers: HeaderMap) -> Response {
    let result = match revision.parse::<u64>() {
        Ok(rev) => blocking(move || app.result_at(&id, rev)).await,
        Err(_) => Err(ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::Usage, format!("invalid revision `{revision}`"))),
    };
    ok(&headers, result)
}

async fn unknown_route(headers: HeaderMap) -> Response {
    let err: Result<(), ApiError> = Err(ApiError::new(StatusCode::NOT_FOUND, ErrorCode::Usage, "no such endpoint"));
    ok(&headers, err)
}
