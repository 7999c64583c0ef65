//! HTTP/JSON service over a network loaded once at startup.
//!
//! Routes:
//! - `GET  /v1/network/stats`
//! - `POST /v1/recommend`
//! - `POST /v1/whatif`
//!
//! Bodies are produced by [`teamrep_core::wire::render_json`], the same
//! serializer the CLI prints with.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use teamrep_core::network::{LabeledNetwork, TeamCatalog};
use teamrep_core::wire::{
    execute_recommend, execute_whatif, network_stats, render_json, ApiError, RecommendRequest, WhatIfRequest,
};
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

/// The immutable snapshot every request reads.
#[derive(Debug)]
pub struct AppState {
    pub net: LabeledNetwork,
    pub catalog: TeamCatalog,
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Origins allowed by CORS. Empty means any origin.
    pub cors_origins: Vec<String>,
    /// Static UI assets served under `/` when set.
    pub static_dir: Option<PathBuf>,
}

struct Json(StatusCode, String);

impl IntoResponse for Json {
    fn into_response(self) -> Response {
        (self.0, [(header::CONTENT_TYPE, "application/json")], self.1).into_response()
    }
}

fn failure(e: ApiError) -> Json {
    let status = StatusCode::from_u16(e.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    if status.is_server_error() {
        tracing::warn!(code = e.code, "{}", e.message);
    }
    Json(status, render_json(&e.body()))
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

/// Runs a CPU-bound query off the async workers.
async fn compute<Req, Resp>(
    state: Arc<AppState>,
    body: Bytes,
    run: fn(&LabeledNetwork, &TeamCatalog, &Req) -> Result<Resp, ApiError>,
) -> Json
where
    Req: DeserializeOwned + Send + 'static,
    Resp: serde::Serialize + Send + 'static,
{
    let req: Req = match parse(&body) {
        Ok(r) => r,
        Err(e) => return failure(e),
    };
    let joined =
        tokio::task::spawn_blocking(move || run(&state.net, &state.catalog, &req).map(|r| render_json(&r))).await;
    match joined {
        Ok(Ok(text)) => Json(StatusCode::OK, text),
        Ok(Err(e)) => failure(e),
        Err(e) => {
            tracing::error!("query task failed: {e}");
            Json(
                StatusCode::INTERNAL_SERVER_ERROR,
                render_json(&teamrep_core::wire::ErrorBody {
                    error: "internal".into(),
                    message: "query task failed".into(),
                }),
            )
        }
    }
}

async fn stats(State(state): State<Arc<AppState>>) -> Json {
    Json(StatusCode::OK, render_json(&network_stats(&state.net, &state.catalog)))
}

async fn recommend(State(state): State<Arc<AppState>>, body: Bytes) -> Json {
    compute::<RecommendRequest, _>(state, body, execute_recommend).await
}

async fn whatif(State(state): State<Arc<AppState>>, body: Bytes) -> Json {
    compute::<WhatIfRequest, _>(state, body, execute_whatif).await
}

async fn not_found() -> Json {
    Json(
        StatusCode::NOT_FOUND,
        render_json(&teamrep_core::wire::ErrorBody {
            error: "not_found".into(),
            message: "no such route".into(),
        }),
    )
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    if origins.is_empty() {
        return layer.allow_origin(Any);
    }
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    layer.allow_origin(AllowOrigin::list(list))
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/v1/network/stats", get(stats))
        .route("/v1/recommend", post(recommend))
        .route("/v1/whatif", post(whatif))
        .with_state(state);
    let app = match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    app.layer(cors(&config.cors_origins)).layer(TraceLayer::new_for_http())
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    config: &ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, n = state.net.n(), m = state.net.m(), "serving");
    axum::serve(listener, router(state, config))
        .with_graceful_shutdown(shutdown)
        .await
}
