//! Stateless HTTP front end. The only shared state is the preset table,
//! which is never mutated after startup.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::api::{self, ApiError, FieldError, ScoreRequest, SweepRequest};
use routerisk::PresetTable;

pub fn router(presets: Arc<PresetTable>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/presets", get(presets_handler))
        .route("/api/score", post(score_handler))
        .route("/api/sweep", post(sweep_handler))
        .with_state(presets)
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::BAD_REQUEST);
        (status, Json(self)).into_response()
    }
}

/// Decodes a JSON body, reporting the path of the offending field.
fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError {
            status: 400,
            errors: vec![FieldError {
                field: if path == "." { String::new() } else { path },
                message: e.into_inner().to_string(),
            }],
        }
    })
}

fn respond<T: Serialize>(result: Result<T, ApiError>) -> Response {
    match result {
        Ok(body) => Json(body).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "engine_version": routerisk::ENGINE_VERSION }))
}

async fn presets_handler(State(presets): State<Arc<PresetTable>>) -> Response {
    respond(api::presets_view(&presets))
}

async fn score_handler(State(presets): State<Arc<PresetTable>>, body: Bytes) -> Response {
    respond(decode::<ScoreRequest>(&body).and_then(|req| api::score(&presets, &req)))
}

async fn sweep_handler(State(presets): State<Arc<PresetTable>>, body: Bytes) -> Response {
    respond(decode::<SweepRequest>(&body).and_then(|req| api::sweep(&presets, &req)))
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(presets: Arc<PresetTable>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(presets)).await
}
