use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use axum::body::Body;
use fluidc_agents::pipeline::PipelineConfig;
use fluidc_agents::project::validate_document;
use fluidc_agents::run_project;
use fluidc_core::patterns::ShapeRequest;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::api::{self, CompileRequest, InputRequest, LayoutRequest, SessionRequest, StepRequest, VerifyRequest};
use crate::error::{ApiError, ApiJson};
use crate::{ws, AppState};

type ApiResult = Result<Json<Value>, ApiError>;

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/compile", post(compile))
        .route("/verify", post(verify))
        .route("/layout", post(layout))
        .route("/patterns", post(patterns))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/inputs", post(set_input))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/ws", get(ws::upgrade))
        .route("/design/run", post(design_run))
        .route("/projects/{name}", get(list_project))
        .route("/projects/{name}/{doc}", get(get_document).put(put_document))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new().nest("/api", api).with_state(state)
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let expected = state
        .config
        .auth_token_env
        .as_deref()
        .and_then(|name| std::env::var(name).ok())
        .filter(|t| !t.is_empty());
    if let Some(token) = expected {
        let presented = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token")
                .into_response();
        }
    }
    next.run(req).await
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn compile(ApiJson(req): ApiJson<CompileRequest>) -> ApiResult {
    api::compile(&req).map(Json)
}

async fn verify(ApiJson(req): ApiJson<VerifyRequest>) -> ApiResult {
    blocking(move || api::verify(&req)).await.map(Json)
}

async fn layout(ApiJson(req): ApiJson<LayoutRequest>) -> ApiResult {
    blocking(move || api::layout(&req)).await.map(Json)
}

async fn patterns(ApiJson(req): ApiJson<ShapeRequest>) -> ApiResult {
    api::pattern(&req).map(Json)
}

fn session(state: &AppState, id: &str) -> Result<std::sync::Arc<crate::sessions::Session>, ApiError> {
    state
        .sessions
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
}

async fn create_session(State(state): State<AppState>, ApiJson(req): ApiJson<SessionRequest>) -> Result<(StatusCode, Json<Value>), ApiError> {
    let netlist = req.source.resolve()?;
    let s = state.sessions.create(&netlist, req.sim_config, req.autorun)?;
    Ok((StatusCode::CREATED, Json(s.summary())))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(json!(session(&state, &id)?.state())))
}

async fn set_input(State(state): State<AppState>, Path(id): Path<String>, ApiJson(req): ApiJson<InputRequest>) -> ApiResult {
    let s = session(&state, &id)?;
    Ok(Json(json!(s.set_input(&req.net, req.v)?)))
}

async fn step(State(state): State<AppState>, Path(id): Path<String>, ApiJson(req): ApiJson<StepRequest>) -> ApiResult {
    let s = session(&state, &id)?;
    let (view, events) = blocking(move || s.step(req.dt).map_err(ApiError::from)).await?;
    Ok(Json(json!({"state": view, "events": events})))
}

#[derive(Deserialize)]
struct DesignRequest {
    project: String,
    #[serde(default)]
    pipeline_config: PipelineConfig,
}

async fn design_run(State(state): State<AppState>, ApiJson(req): ApiJson<DesignRequest>) -> ApiResult {
    let transport_cfg = req
        .pipeline_config
        .transport
        .clone()
        .ok_or_else(|| ApiError::bad_request("pipeline_config.transport is required"))?;
    let dir = state.store.dir(&req.project)?;
    if !dir.is_dir() {
        return Err(ApiError::not_found(format!("unknown project `{}`", req.project)));
    }
    if !state.claim(&req.project) {
        return Err(ApiError::new(StatusCode::CONFLICT, "conflict", "a design run is already active for this project"));
    }
    let project = req.project.clone();
    let st = state.clone();
    let result = blocking(move || {
        let transport = transport_cfg.build()?;
        let artifacts = run_project(&st.store, &req.project, &req.pipeline_config, transport.as_ref())?;
        Ok(serde_json::to_value(artifacts).unwrap())
    })
    .await;
    state.release(&project);
    result.map(Json)
}

async fn list_project(State(state): State<AppState>, Path(name): Path<String>) -> ApiResult {
    let docs = state.store.list(&name)?;
    if docs.is_empty() && !state.store.dir(&name)?.is_dir() {
        return Err(ApiError::not_found(format!("unknown project `{name}`")));
    }
    Ok(Json(json!({"name": name, "documents": docs})))
}

async fn get_document(State(state): State<AppState>, Path((name, doc)): Path<(String, String)>) -> Result<Response, ApiError> {
    match state.store.read_raw(&name, &doc)? {
        Some(bytes) => Ok(([(header::CONTENT_TYPE, "application/json")], Body::from(bytes)).into_response()),
        None => Err(ApiError::not_found(format!("`{doc}` not found in project `{name}`"))),
    }
}

async fn put_document(
    State(state): State<AppState>,
    Path((name, doc)): Path<(String, String)>,
    body: axum::body::Bytes,
) -> Result<StatusCode, ApiError> {
    validate_document(&doc, &body)?;
    state.store.write_raw(&name, &doc, &body)?;
    Ok(StatusCode::NO_CONTENT)
}
