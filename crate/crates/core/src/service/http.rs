use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use super::log::{parse_instant, TraceFilter};
use super::{problem_catalog, CreateSession, SessionStore};
use crate::error::{Error, Result};

type Shared = Arc<Mutex<SessionStore>>;

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match &self.0 {
            Error::OutOfDomain { lower, upper, .. } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": self.0.to_string(), "lower": lower, "upper": upper }),
            ),
            Error::NotFound(_) => (StatusCode::NOT_FOUND, json!({ "error": self.0.to_string() })),
            Error::State(_) => (StatusCode::CONFLICT, json!({ "error": self.0.to_string() })),
            e if e.is_input() => (StatusCode::BAD_REQUEST, json!({ "error": e.to_string() })),
            e => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": e.to_string() })),
        };
        (status, Json(body)).into_response()
    }
}

fn lock(state: &Shared) -> std::sync::MutexGuard<'_, SessionStore> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

async fn create_session(
    State(state): State<Shared>,
    Json(req): Json<CreateSession>,
) -> Result<impl IntoResponse, ApiError> {
    let view = lock(&state).create_session(req)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(lock(&state).get_session(&id)?))
}

#[derive(Deserialize)]
struct Click {
    x1: f64,
    x2: f64,
}

async fn submit_click(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(click): Json<Click>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(lock(&state).submit_click(&id, [click.x1, click.x2])?))
}

async fn problems() -> impl IntoResponse {
    Json(problem_catalog())
}

#[derive(Deserialize)]
struct ExportQuery {
    player: Option<String>,
    problem: Option<String>,
    from: Option<String>,
    to: Option<String>,
}

async fn export(State(state): State<Shared>, Query(q): Query<ExportQuery>) -> Result<impl IntoResponse, ApiError> {
    let filter = TraceFilter {
        player: q.player,
        problem: q.problem,
        from: q.from.as_deref().map(|s| parse_instant(s, false)).transpose()?,
        to: q.to.as_deref().map(|s| parse_instant(s, true)).transpose()?,
    };
    Ok(Json(lock(&state).export(&filter)?))
}

pub fn router(store: SessionStore) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/clicks", post(submit_click))
        .route("/problems", get(problems))
        .route("/export", get(export))
        .with_state(Arc::new(Mutex::new(store)))
}

/// Serves the game API on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    store: SessionStore,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    ::log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Opens the log at `log_path`, binds `addr` and serves until `shutdown`.
pub async fn serve(
    addr: SocketAddr,
    log_path: &Path,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let store = SessionStore::open(log_path)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, store, shutdown).await
}
