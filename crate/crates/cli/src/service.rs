//! HTTP API over a shared graph store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::graph::{extract_subgraph, ApplyMode, GraphStore, KnowledgeGraph};
use intentmfg_core::model::{validate, RequirementModel};
use intentmfg_core::translate::{
    EndpointConfig, IntentText, RemoteTranslator, RuleTranslator, TranslationBackend, TranslationFailure,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tracing::{info, warn};

use crate::config::{AppConfig, BackendKind};
use crate::error::{ApiError, ErrorCode, Failure};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

pub struct AppState {
    catalog: Arc<ProcessCatalog>,
    store: GraphStore,
    rule: RuleTranslator,
    remote: Option<Arc<RemoteTranslator>>,
    default_backend: BackendKind,
    apply_slots: Arc<Semaphore>,
}

impl AppState {
    pub fn new(
        catalog: ProcessCatalog,
        graph: KnowledgeGraph,
        default_backend: BackendKind,
        endpoint: Option<EndpointConfig>,
        apply_queue: usize,
    ) -> Result<Self, String> {
        let catalog = Arc::new(catalog);
        let remote = endpoint.map(RemoteTranslator::new).transpose()?.map(Arc::new);
        if default_backend == BackendKind::Remote && remote.is_none() {
            return Err("remote backend selected without an endpoint".into());
        }
        Ok(Self {
            rule: RuleTranslator::new(catalog.clone()),
            catalog,
            store: GraphStore::new(graph),
            remote,
            default_backend,
            apply_slots: Arc::new(Semaphore::new(apply_queue)),
        })
    }

    pub fn from_config(config: &AppConfig) -> Result<Self, Failure> {
        Self::new(
            config.load_catalog()?,
            config.load_ontology()?,
            config.backend,
            config.endpoint.clone(),
            config.server.apply_queue,
        )
        .map_err(Failure::usage)
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    /// Admission slots for `/apply`; an apply that finds none free is refused.
    pub fn apply_slots(&self) -> &Arc<Semaphore> {
        &self.apply_slots
    }
}

type Shared = Arc<AppState>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn parse_model(value: &Value) -> Result<RequirementModel, ApiError> {
    RequirementModel::from_json(value).map_err(|e| ApiError::from(e).under("/model"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslateRequest {
    intent: String,
    #[serde(default)]
    backend: Option<BackendKind>,
}

async fn translate(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: TranslateRequest = parse_body(&body)?;
    let intent = IntentText::new(req.intent).map_err(|e| ApiError::bad_request(e.to_string()).at("/intent"))?;
    let backend = req.backend.unwrap_or(state.default_backend);
    let result = match backend {
        BackendKind::Rule => state.rule.translate(&intent),
        BackendKind::Remote => {
            let remote = state
                .remote
                .clone()
                .ok_or_else(|| ApiError::bad_request("remote backend is not configured").at("/backend"))?;
            tokio::task::spawn_blocking(move || remote.translate(&intent))
                .await
                .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
        }
    };
    if let Some(TranslationFailure::TransportFailure { message, .. }) = result.failure_kind() {
        warn!(%message, "remote backend failed");
        return Err(ApiError::new(ErrorCode::BackendFailure, message.clone()));
    }
    info!(?backend, success = result.is_success(), latency_ms = result.latency_ms(), "translate");
    Ok(Json(result).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRequest {
    model: Value,
}

async fn validate_model(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: ModelRequest = parse_body(&body)?;
    let model = parse_model(&req.model)?;
    Ok(Json(validate(&model, &state.catalog)).into_response())
}

async fn catalog(State(state): State<Shared>) -> Response {
    Json(&*state.catalog).into_response()
}

async fn graph(State(state): State<Shared>) -> Response {
    json_text(state.store.snapshot().to_json())
}

#[derive(Deserialize)]
struct SubgraphQuery {
    goal: Option<String>,
}

async fn subgraph(State(state): State<Shared>, Query(q): Query<SubgraphQuery>) -> Result<Response, ApiError> {
    let goal = q.goal.ok_or_else(|| ApiError::bad_request("missing query parameter `goal`"))?;
    let sub = extract_subgraph(&state.store.snapshot(), &goal).map_err(ApiError::from)?;
    Ok(json_text(sub.to_json()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyRequest {
    model: Value,
    #[serde(default)]
    mode: ApplyMode,
}

async fn apply(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: ApplyRequest = parse_body(&body)?;
    let model = parse_model(&req.model)?;
    let permit = state
        .apply_slots
        .clone()
        .try_acquire_owned()
        .map_err(|_| ApiError::new(ErrorCode::Conflict, "apply queue is full; retry later"))?;
    let worker = state.clone();
    let report = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        worker.store.apply(&model, req.mode, Utc::now())
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
    .map_err(|e| ApiError::from(e).under("/model"))?;
    info!(goal = %report.goal, changed = report.entries.iter().filter(|e| e.changed()).count(), "apply");
    Ok(Json(report).into_response())
}

async fn healthz() -> Response {
    Json(json!({"status": "ok"})).into_response()
}

async fn no_route() -> Response {
    (StatusCode::NOT_FOUND, Json(ApiError::bad_request("no such endpoint"))).into_response()
}

async fn bad_method() -> Response {
    let e = ApiError::bad_request("method not allowed");
    (StatusCode::METHOD_NOT_ALLOWED, Json(e)).into_response()
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/translate", post(translate))
        .route("/validate", post(validate_model))
        .route("/catalog", get(catalog))
        .route("/graph", get(graph))
        .route("/subgraph", get(subgraph))
        .route("/apply", post(apply))
        .route("/healthz", get(healthz))
        .fallback(no_route)
        .method_not_allowed_fallback(bad_method)
        .with_state(state)
}

/// Binds and serves until interrupted.
pub async fn serve(config: AppConfig) -> Result<(), Failure> {
    let state = Arc::new(AppState::from_config(&config)?);
    let addr = config.server.addr();
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Failure::io(format!("cannot bind {addr}: {e}")))?;
    info!(%addr, backend = ?config.backend, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::io(e.to_string()))
}
