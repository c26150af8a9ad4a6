//! Axum routes over [`Service`].
//!
//! Every route needs a bearer token, and every response carries the graph
//! snapshot version in `X-Graph-Version`. Mutations take the service's write
//! lock; curation runs as a job on a blocking thread and holds that lock for
//! its whole run.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE, LOCATION};
use axum::http::request::Parts;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::api::{Actor, ApiError, CurateRequest, EntityRequest, QueryRequest, RelationRequest, ResolveRequest, Service};
use crate::auth::Users;
use crate::jobs::Jobs;

pub const GRAPH_VERSION_HEADER: HeaderName = HeaderName::from_static("x-graph-version");

#[derive(Clone)]
pub struct AppState {
    service: Arc<RwLock<Service>>,
    users: Arc<Users>,
    jobs: Arc<Jobs>,
    version: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(service: Service, users: Users) -> Self {
        let version = Arc::new(AtomicU64::new(service.version()));
        AppState {
            service: Arc::new(RwLock::new(service)),
            users: Arc::new(users),
            jobs: Arc::new(Jobs::new()),
            version,
        }
    }

    async fn mutate<T>(&self, f: impl FnOnce(&mut Service) -> T) -> T {
        let mut svc = self.service.write().await;
        let out = f(&mut svc);
        self.version.store(svc.version(), Ordering::SeqCst);
        out
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/whoami", get(whoami))
        .route("/api/ontology", get(ontology))
        .route("/api/corpus/{chapter}", get(corpus))
        .route("/api/annotate/entity", post(annotate_entity))
        .route("/api/annotate/relation", post(annotate_relation))
        .route("/api/annotate/{id}", delete(delete_annotation))
        .route("/api/suggest", get(suggest))
        .route("/api/templates", get(templates))
        .route("/api/query", post(query))
        .route("/api/curate", post(curate))
        .route("/api/jobs/{id}", get(job))
        .route("/api/graph/export", get(export_graph))
        .route("/api/graph/stats", get(stats))
        .route("/api/conflicts", get(conflicts))
        .route("/api/conflicts/{lemma}/resolve", post(resolve))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), stamp_version))
        .with_state(state)
}

async fn stamp_version(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let (method, path) = (req.method().clone(), req.uri().path().to_string());
    let mut res = next.run(req).await;
    tracing::info!(%method, %path, status = res.status().as_u16());
    let v = state.version.load(Ordering::SeqCst);
    res.headers_mut().insert(GRAPH_VERSION_HEADER, HeaderValue::from(v));
    res
}

pub fn json_response(status: StatusCode, body: &Value) -> Response {
    let text = serde_json::to_string(body).expect("JSON values serialize");
    (status, [(CONTENT_TYPE, "application/json")], text).into_response()
}

fn ok(body: Value) -> Response {
    json_response(StatusCode::OK, &body)
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, &self.to_json())
    }
}

/// The authenticated caller.
pub struct Caller(pub Actor);

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|h| h.to_str().ok())
            .ok_or(ApiError::Unauthorized)?;
        let user = state.users.from_header(header).ok_or(ApiError::Unauthorized)?;
        Ok(Caller(Actor::new(&user.name, user.role)))
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

fn param<T: std::str::FromStr>(params: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    match params.get(name).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| ApiError::BadRequest(format!("invalid {name} parameter {s:?}"))),
    }
}

async fn not_found(Caller(_): Caller) -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}

async fn whoami(Caller(actor): Caller) -> Response {
    ok(json!({"name": actor.name, "role": actor.role}))
}

async fn ontology(State(st): State<AppState>, Caller(_): Caller) -> Response {
    ok(st.service.read().await.ontology())
}

async fn corpus(
    State(st): State<AppState>,
    Caller(_): Caller,
    Path(chapter): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let (from, to) = (param(&params, "from")?, param(&params, "to")?);
    Ok(ok(st.service.read().await.corpus_lines(&chapter, from, to)?))
}

async fn annotate_entity(State(st): State<AppState>, Caller(actor): Caller, raw: Bytes) -> Result<Response, ApiError> {
    let req: EntityRequest = body(&raw)?;
    let v = st.mutate(|s| s.annotate_entity(&actor, req)).await?;
    Ok(json_response(StatusCode::CREATED, &v))
}

async fn annotate_relation(State(st): State<AppState>, Caller(actor): Caller, raw: Bytes) -> Result<Response, ApiError> {
    let req: RelationRequest = body(&raw)?;
    let v = st.mutate(|s| s.annotate_relation(&actor, req)).await?;
    Ok(json_response(StatusCode::CREATED, &v))
}

async fn delete_annotation(
    State(st): State<AppState>,
    Caller(actor): Caller,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let id: u64 = id
        .parse()
        .map_err(|_| ApiError::BadRequest(format!("invalid annotation id {id:?}")))?;
    Ok(ok(st.mutate(|s| s.delete_annotation(&actor, id)).await?))
}

async fn suggest(
    State(st): State<AppState>,
    Caller(_): Caller,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    ok(st.service.read().await.suggest(q))
}

async fn templates(State(st): State<AppState>, Caller(_): Caller) -> Response {
    ok(st.service.read().await.templates())
}

async fn query(State(st): State<AppState>, Caller(_): Caller, raw: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest = body(&raw)?;
    Ok(ok(st.service.read().await.query(&req)?))
}

async fn curate(State(st): State<AppState>, Caller(actor): Caller, raw: Bytes) -> Result<Response, ApiError> {
    let req: CurateRequest = body(&raw)?;
    if !actor.role.can_curate() {
        return Err(ApiError::Forbidden {
            role: actor.role,
            action: "run curation",
        });
    }
    let job = st.jobs.submit(req.pass, req.dry_run, &actor.name);
    let id = job.job_id;
    let worker = st.clone();
    tokio::task::spawn_blocking(move || {
        let mut svc = worker.service.blocking_write();
        worker.jobs.start(id);
        let outcome = svc.curate(&actor, &req).map_err(|e| e.to_json());
        let version = svc.version();
        worker.version.store(version, Ordering::SeqCst);
        drop(svc);
        worker.jobs.finish(id, outcome, version);
    });
    let mut res = json_response(StatusCode::ACCEPTED, &serde_json::to_value(&job).expect("jobs serialize"));
    if let Ok(loc) = HeaderValue::from_str(&format!("/api/jobs/{id}")) {
        res.headers_mut().insert(LOCATION, loc);
    }
    Ok(res)
}

async fn job(State(st): State<AppState>, Caller(_): Caller, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = id
        .parse()
        .ok()
        .and_then(|id| st.jobs.get(id))
        .ok_or_else(|| ApiError::NotFound(format!("no job {id:?}")))?;
    Ok(ok(serde_json::to_value(&job).expect("jobs serialize")))
}

async fn export_graph(State(st): State<AppState>, Caller(_): Caller) -> Response {
    ok(st.service.read().await.export_graph())
}

async fn stats(State(st): State<AppState>, Caller(_): Caller) -> Response {
    ok(st.service.read().await.stats())
}

async fn conflicts(State(st): State<AppState>, Caller(_): Caller) -> Response {
    ok(st.service.read().await.conflicts())
}

async fn resolve(
    State(st): State<AppState>,
    Caller(actor): Caller,
    Path(lemma): Path<String>,
    raw: Bytes,
) -> Result<Response, ApiError> {
    let req: ResolveRequest = body(&raw)?;
    Ok(ok(st.mutate(|s| s.resolve_conflict(&actor, &lemma, &req)).await?))
}
