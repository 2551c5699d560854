//! HTTP API.
//!
//! | method | path                          | success                          |
//! |--------|-------------------------------|----------------------------------|
//! | GET    | /health                       | 200 `{status, plans}`            |
//! | POST   | /plans                        | 201 `{plan_id, version, cost}`   |
//! | GET    | /plans/{id}                   | 200 `{plan_id, version, cost, tree}` |
//! | GET    | /plans/{id}/lines             | 200 `{plan_id, version, goal, lines}` |
//! | POST   | /plans/{id}/corrections       | 200 `{plan_id, version, changed}` |
//! | POST   | /plans/{id}/compile           | 200 `{plan_id, version, steps}`  |
//! | GET    | /plans/{id}/network/rejections| 200 rejection log                |
//!
//! Errors are `{"error": code, "message": text}` plus code-specific fields:
//!
//! | status | code                 | when                                        |
//! |--------|----------------------|---------------------------------------------|
//! | 404    | not_found            | unknown route or plan id                    |
//! | 405    | method_not_allowed   | known route, wrong method                   |
//! | 409    | stale_version        | correction against an old version; has `current_version` |
//! | 422    | invalid_body         | body is not JSON or does not fit the schema |
//! | 422    | correction_rejected  | correction fails validation; has `unit_index` when known |
//! | 422    | no_plan              | merge or retrieval found nothing            |
//! | 422    | compile_failed       | a unit cannot be compiled or solved; has `unit_index` |
//! | 502    | generation_failed    | the model backend failed                    |
//! | 503    | no_backend           | demand given but no backend configured      |
//! | 500    | storage_failed       | the data directory could not be written     |

use std::sync::{Arc, RwLock};

use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use treeplan_core::{apply_correction, to_progress_lines, Correction, CorrectionError, TaskTree};
use treeplan_llm::{Backend, Gateway, GenerationRequest, DEFAULT_N_TREES};

use crate::pipeline::{compile, format_cost, plan_trees, tree_cost_of, PipelineError};
use crate::settings::Settings;
use crate::store::{Snapshot, Store};

pub struct AppState {
    pub settings: Settings,
    pub gateway: Option<Gateway<Box<dyn Backend>>>,
    pub store: RwLock<Store>,
}

impl AppState {
    pub fn new(settings: Settings, gateway: Option<Gateway<Box<dyn Backend>>>, store: Store) -> Arc<Self> {
        Arc::new(AppState { settings, gateway, store: RwLock::new(store) })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> Self {
        ApiError { status, body: json!({"error": code, "message": message.to_string()}) }
    }

    fn with(mut self, field: &str, value: impl Into<Value>) -> Self {
        self.body[field] = value.into();
        self
    }

    fn not_found(what: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<crate::store::StoreError> for ApiError {
    fn from(e: crate::store::StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failed", e)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Generate(g) => ApiError::new(StatusCode::BAD_GATEWAY, "generation_failed", g),
            PipelineError::Compile(c) => {
                let unit = c.unit_index();
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "compile_failed", c).with("unit_index", unit)
            }
            PipelineError::Input(m) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", m),
            other @ (PipelineError::Merge(_) | PipelineError::Retrieve(_)) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_plan", other)
            }
            PipelineError::Output(m) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failed", m),
        }
    }
}

/// JSON body whose every rejection (syntax, schema, content type) is a 422.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(Body(value)),
            Err(rejection) => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", rejection.body_text())),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreatePlan {
    demand: Option<String>,
    n_trees: Option<usize>,
    trees: Option<Vec<TaskTree>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrectionBody {
    version: u64,
    correction: Correction,
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/plans", post(create_plan))
        .route("/plans/{id}", get(show_plan))
        .route("/plans/{id}/lines", get(lines))
        .route("/plans/{id}/corrections", post(correct))
        .route("/plans/{id}/compile", post(compile_plan))
        .route("/plans/{id}/network/rejections", get(rejections))
        .fallback(|| async { ApiError::not_found("route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
        })
        .with_state(state)
}

fn snapshot(state: &AppState, id: &str) -> Result<Arc<Snapshot>, ApiError> {
    state.store.read().expect("store lock").get(id).ok_or_else(|| ApiError::not_found("plan"))
}

async fn blocking<T: Send + 'static>(job: impl FnOnce() -> T + Send + 'static) -> T {
    tokio::task::spawn_blocking(job).await.expect("worker thread panicked")
}

async fn health(State(state): State<Shared>) -> Json<Value> {
    let plans = state.store.read().expect("store lock").len();
    Json(json!({"status": "ok", "plans": plans}))
}

async fn create_plan(State(state): State<Shared>, Body(body): Body<CreatePlan>) -> Result<(StatusCode, Json<Value>), ApiError> {
    let worker = state.clone();
    let (planned, snapshot) = blocking(move || -> Result<_, ApiError> {
        let trees = match (body.demand, body.trees) {
            (Some(demand), None) => {
                let gateway = worker
                    .gateway
                    .as_ref()
                    .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_backend", "no generation backend configured"))?;
                let request = GenerationRequest::new(&demand).with_trees(body.n_trees.unwrap_or(DEFAULT_N_TREES));
                gateway.generate_trees(&request).map_err(PipelineError::from)?
            }
            (None, Some(trees)) if !trees.is_empty() && body.n_trees.is_none() => trees,
            _ => {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "invalid_body",
                    "give either `demand` (with optional `n_trees`) or a non-empty `trees` list",
                ))
            }
        };
        let planned = plan_trees(&trees, &worker.settings)?;
        let snapshot = worker.store.write().expect("store lock").create(
            planned.tree.clone(),
            planned.network.clone(),
            planned.rejections.clone(),
        )?;
        Ok((planned, snapshot))
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"plan_id": snapshot.id, "version": snapshot.version, "cost": format_cost(&planned.cost)})),
    ))
}

async fn show_plan(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = snapshot(&state, &id)?;
    Ok(Json(json!({
        "plan_id": s.id,
        "version": s.version,
        "cost": format_cost(&tree_cost_of(&s.tree, &state.settings)),
        "tree": s.tree,
    })))
}

async fn lines(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = snapshot(&state, &id)?;
    let lines = to_progress_lines(&s.tree);
    Ok(Json(json!({"plan_id": s.id, "version": s.version, "goal": lines.goal, "lines": lines.lines})))
}

async fn correct(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Body(body): Body<CorrectionBody>,
) -> Result<Json<Value>, ApiError> {
    let mut store = state.store.write().expect("store lock");
    let current = store.get(&id).ok_or_else(|| ApiError::not_found("plan"))?;
    if body.version != current.version {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "stale_version",
            format!("correction made against version {}, plan is at {}", body.version, current.version),
        )
        .with("current_version", current.version));
    }
    let tree = apply_correction(&current.tree, &body.correction, &state.settings.table).map_err(|e| {
        let unit = match &e {
            CorrectionError::ConsistencyViolation { unit_index, .. } | CorrectionError::InvalidUnit { unit_index, .. } => {
                Some(*unit_index)
            }
            CorrectionError::TargetNotFound(_) | CorrectionError::MalformedPatch(_) => None,
        };
        let error = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "correction_rejected", &e);
        match unit {
            Some(u) => error.with("unit_index", u),
            None => error,
        }
    })?;
    if tree == current.tree {
        return Ok(Json(json!({"plan_id": id, "version": current.version, "changed": false})));
    }
    let next = store.commit(&current, tree)?;
    Ok(Json(json!({"plan_id": id, "version": next.version, "changed": true})))
}

async fn compile_plan(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = snapshot(&state, &id)?;
    let worker = state.clone();
    let tree = s.tree.clone();
    let steps = blocking(move || compile(&tree, &worker.settings)).await?;
    let steps: Vec<Value> = steps
        .iter()
        .map(|step| {
            json!({
                "unit_index": step.unit_index,
                "motion": s.tree.units[step.unit_index].motion().label(),
                "domain": step.domain.to_string(),
                "problem": step.problem.to_string(),
                "plan": step.plan.steps.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Json(json!({"plan_id": s.id, "version": s.version, "steps": steps})))
}

async fn rejections(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = snapshot(&state, &id)?;
    Ok(Json(serde_json::to_value(&*s.rejections).expect("rejection log serializes")))
}

/// Serve until the process is stopped.
pub async fn serve(state: Shared, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
