//! REST facade. JSON in and out; provider-bound operations return a job.

use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, patch, post};
use axum::{Json, Router};
use base64::Engine as _;
use serde::Deserialize;
use serde_json::json;
use suif_core::provider_gateway::Attachment;
use suif_core::relation_engine::RelationEdge;
use suif_core::session_store::SessionStore;
use suif_core::Error;

use crate::config::ServiceConfig;
use crate::jobs::{ErrorBody, Jobs};
use crate::ops::{Engine, SharedEngine};

#[derive(Clone)]
pub struct AppState {
    pub engine: SharedEngine,
    pub jobs: Jobs,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self(Error::InvalidRequest(r.body_text()))
    }
}

fn status_of(e: &Error) -> StatusCode {
    use Error::*;
    match e {
        UnknownSession(_) | UnknownVersion(_) => StatusCode::NOT_FOUND,
        NoChange | SlotOccupied(_) | DiffConflict { .. } => StatusCode::CONFLICT,
        InvalidPath(_) | EmptyText | EmptyName | DuplicateName(_) | MalformedDocument { .. }
        | InvalidRequest(_) | EmptyPrompt | EmptyState | EmptyDiff | EmptyArtifact
        | NothingToAnalyze | SuggestionMissing => StatusCode::UNPROCESSABLE_ENTITY,
        ProviderUnavailable(_) | FixtureMissing { .. } | SchemaViolation { .. } | EmptyGeneration => {
            StatusCode::BAD_GATEWAY
        }
        UnknownSchema(_) | BindFailure(_) | ConfigInvalid(_) | Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(ErrorBody::from(&self.0))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking store work off the async executor.
async fn blocking<T, F>(engine: &SharedEngine, f: F) -> ApiResult<T>
where
    F: FnOnce(&Engine) -> suif_core::Result<T> + Send + 'static,
    T: Send + 'static,
{
    let engine = engine.clone();
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ApiError(Error::InvalidRequest(format!("task failed: {e}"))))?
        .map_err(ApiError)
}

pub fn router(engine: SharedEngine) -> Router {
    let state = AppState {
        engine,
        jobs: Jobs::default(),
    };
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/semantics", patch(patch_semantics))
        .route("/sessions/{id}/components", post(add_component))
        .route("/sessions/{id}/components/{name}", delete(remove_component))
        .route("/sessions/{id}/parse", post(start_parse))
        .route("/sessions/{id}/generate", post(start_generate))
        .route("/sessions/{id}/analyze", post(start_analyze))
        .route("/sessions/{id}/relations", post(start_relations))
        .route("/sessions/{id}/accept", post(accept))
        .route("/sessions/{id}/rollback", post(rollback))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/diff", get(diff))
        .route("/sessions/{id}/prompt", get(prompt))
        .route("/sessions/{id}/graph/current", get(current_graph))
        .route("/sessions/{id}/artifact/current", get(current_artifact))
        .route("/jobs/{id}", get(get_job))
        .with_state(state)
}

#[derive(Deserialize)]
struct CreateBody {
    name: String,
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    let id = blocking(&app.engine, move |e| e.store.create_session(&body.name).map(|s| s.id().to_string())).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn list_sessions(State(app): State<AppState>) -> ApiResult<impl IntoResponse> {
    let ids = blocking(&app.engine, |e| e.store.list()).await?;
    Ok(Json(json!({ "sessions": ids })))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&app.engine, move |e| e.view(&id)).await?))
}

#[derive(Deserialize)]
struct PatchBody {
    path: String,
    text: Option<String>,
}

async fn patch_semantics(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PatchBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    let commit = blocking(&app.engine, move |e| e.set_slot(&id, &body.path, body.text.as_deref())).await?;
    Ok(Json(commit))
}

#[derive(Deserialize)]
struct ComponentBody {
    name: String,
}

async fn add_component(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ComponentBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    Ok(Json(blocking(&app.engine, move |e| e.add_component(&id, &body.name)).await?))
}

async fn remove_component(
    State(app): State<AppState>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&app.engine, move |e| e.remove_component(&id, &name)).await?))
}

/// Confirms the session exists, then hands `work` to the job pool.
async fn start_job<T, F>(app: AppState, kind: &'static str, id: String, work: F) -> ApiResult<Response>
where
    F: FnOnce(&Engine) -> suif_core::Result<T> + Send + 'static,
    T: serde::Serialize + 'static,
{
    let check = id.clone();
    blocking(&app.engine, move |e| e.store.load(&check).map(|_| ())).await?;
    let engine = app.engine.clone();
    let job = app.jobs.spawn(kind, &id, move || work(&engine));
    Ok((StatusCode::ACCEPTED, Json(job)).into_response())
}

#[derive(Deserialize)]
struct ParseBody {
    text: String,
}

async fn start_parse(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ParseBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    if body.text.trim().is_empty() {
        return Err(Error::EmptyPrompt.into());
    }
    let sid = id.clone();
    start_job(app, "parse", id, move |e| e.parse(&sid, &body.text)).await
}

async fn start_generate(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let sid = id.clone();
    start_job(app, "generate", id, move |e| e.generate(&sid)).await
}

#[derive(Deserialize, Default)]
struct AnalyzeBody {
    screenshot_base64: Option<String>,
}

async fn start_analyze(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<AnalyzeBody>>,
) -> ApiResult<Response> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let screenshot = match body.screenshot_base64 {
        Some(b64) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(b64.trim())
                .map_err(|e| Error::InvalidRequest(format!("screenshot is not base64: {e}")))?;
            Some(Attachment {
                media_type: "image/png".into(),
                bytes,
            })
        }
        None => None,
    };
    let sid = id.clone();
    start_job(app, "analyze", id, move |e| e.analyze(&sid, screenshot)).await
}

async fn start_relations(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let sid = id.clone();
    start_job(app, "relations", id, move |e| e.relations(&sid)).await
}

#[derive(Deserialize)]
struct AcceptBody {
    edge: RelationEdge,
}

async fn accept(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AcceptBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    Ok(Json(blocking(&app.engine, move |e| e.accept(&id, &body.edge)).await?))
}

#[derive(Deserialize)]
struct RollbackBody {
    version: u64,
}

async fn rollback(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<RollbackBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    Ok(Json(blocking(&app.engine, move |e| e.rollback(&id, body.version)).await?))
}

async fn history(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&app.engine, move |e| e.history(&id)).await?))
}

#[derive(Deserialize)]
struct DiffQuery {
    from: u64,
    to: u64,
}

async fn diff(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DiffQuery>,
) -> ApiResult<impl IntoResponse> {
    let lines = blocking(&app.engine, move |e| e.diff(&id, q.from, q.to)).await?;
    Ok(Json(json!({ "changelog": lines })))
}

#[derive(Deserialize)]
struct PromptQuery {
    version: Option<u64>,
}

async fn prompt(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PromptQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&app.engine, move |e| e.compile(&id, q.version)).await?))
}

async fn current_graph(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let graph = blocking(&app.engine, move |e| Ok(e.session(&id)?.current_graph().cloned())).await?;
    Ok(match graph {
        Some(g) => Json(g).into_response(),
        None => not_found("NO_GRAPH", "session has no relation graph"),
    })
}

async fn current_artifact(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let artifact = blocking(&app.engine, move |e| Ok(e.session(&id)?.current_artifact().cloned())).await?;
    Ok(match artifact {
        Some(a) => (
            [
                (header::CONTENT_TYPE, "text/javascript; charset=utf-8".to_string()),
                (header::HeaderName::from_static("x-artifact-id"), a.artifact_id.clone()),
                (
                    header::HeaderName::from_static("x-produced-from-version"),
                    a.produced_from_version.to_string(),
                ),
            ],
            a.code,
        )
            .into_response(),
        None => not_found("NO_ARTIFACT", "session has no generated artifact"),
    })
}

async fn get_job(State(app): State<AppState>, Path(id): Path<String>) -> Response {
    match app.jobs.get(&id) {
        Some(job) => Json(job).into_response(),
        None => not_found("UNKNOWN_JOB", &format!("unknown job {id}")),
    }
}

fn not_found(code: &str, message: &str) -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(ErrorBody {
            code: code.into(),
            message: message.into(),
        }),
    )
        .into_response()
}

/// Validates `config` and builds the engine it describes.
pub fn engine_for(config: &ServiceConfig) -> suif_core::Result<SharedEngine> {
    config.validate()?;
    let store = SessionStore::open(&config.data_dir)?;
    Ok(Arc::new(Engine::new(store, config.gateway(), config.generation.clone())))
}

/// Serves until `shutdown` resolves. In-flight requests finish first; every
/// commit is written atomically before it is acknowledged.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> suif_core::Result<()> {
    let engine = engine_for(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind_address)
        .await
        .map_err(|e| Error::BindFailure(format!("{}: {e}", config.bind_address)))?;
    serve_on(listener, engine, shutdown).await
}

/// Serves `engine` on an already bound listener.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    engine: SharedEngine,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> suif_core::Result<()> {
    let addr = listener
        .local_addr()
        .map(|a| a.to_string())
        .unwrap_or_default();
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Error::BindFailure(format!("{addr}: {e}")))
}
