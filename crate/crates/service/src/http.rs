//! JSON API over [`Service`]. Every handler runs its session work on the
//! blocking pool: encoders are CPU-bound and remote engines block.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::session::{EncodeRequest, Service};
use crate::ServiceError;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict { .. } => StatusCode::CONFLICT,
            e if e.is_engine_failure() => StatusCode::BAD_GATEWAY,
            ServiceError::Io { .. } | ServiceError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        (status, axum::Json(json!({ "error": self.to_string() }))).into_response()
    }
}

/// `axum::Json` with malformed bodies reported as 422 in the API's error
/// shape.
pub struct Json<T>(pub T);

impl<S, T> FromRequest<S> for Json<T>
where
    axum::Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = Response;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(value)) => Ok(Json(value)),
            Err(rejection) => {
                let status = match rejection {
                    JsonRejection::MissingJsonContentType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
                    _ => StatusCode::UNPROCESSABLE_ENTITY,
                };
                Err((status, axum::Json(json!({ "error": rejection.body_text() }))).into_response())
            }
        }
    }
}

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

type AppState = Arc<Service>;
type ApiResult<T> = Result<Json<T>, ServiceError>;

async fn blocking<T, F>(service: AppState, f: F) -> ApiResult<T>
where
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .expect("session worker panicked")
        .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SendRequest {
    engine: String,
}

async fn create_session(State(svc): State<AppState>, Json(req): Json<CreateRequest>) -> Response {
    match svc.create_session(&req.text) {
        Ok(id) => (StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn show_session(State(svc): State<AppState>, Path(id): Path<String>) -> impl IntoResponse {
    blocking(svc, move |s| s.view(&id)).await
}

async fn delete_session(State(svc): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    svc.delete_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn encode(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<EncodeRequest>,
) -> impl IntoResponse {
    blocking(svc, move |s| s.encode(&id, &req)).await
}

async fn send(State(svc): State<AppState>, Path(id): Path<String>, Json(req): Json<SendRequest>) -> impl IntoResponse {
    blocking(svc, move |s| s.send(&id, &req.engine)).await
}

async fn decode(State(svc): State<AppState>, Path(id): Path<String>) -> impl IntoResponse {
    blocking(svc, move |s| s.decode(&id)).await
}

async fn export(State(svc): State<AppState>, Path(id): Path<String>) -> impl IntoResponse {
    blocking(svc, move |s| s.export(&id).map(|path| json!({ "path": path }))).await
}

async fn engines(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.engines())
}

async fn dict_stats(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.dict_stats())
}

async fn audit(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.audit_records())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(show_session).delete(delete_session))
        .route("/v1/sessions/{id}/encode", post(encode))
        .route("/v1/sessions/{id}/send", post(send))
        .route("/v1/sessions/{id}/decode", post(decode))
        .route("/v1/sessions/{id}/export", post(export))
        .route("/v1/engines", get(engines))
        .route("/v1/dict/stats", get(dict_stats))
        .route("/v1/audit", get(audit))
        .with_state(service)
}

/// Serve until Ctrl-C. Non-loopback addresses are allowed but warned about.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> Result<(), ServiceError> {
    if !addr.ip().is_loopback() {
        eprintln!("warning: listening on non-loopback address {addr}; private text will be reachable from the network");
    }
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServiceError::io(format!("binding {addr}"), e))?;
    let local = listener
        .local_addr()
        .map_err(|e| ServiceError::io("reading bound address", e))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::io("serving", e))
}
