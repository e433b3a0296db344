//! Route handlers.
//!
//! Engine calls may block on a remote completion, so every handler that
//! generates a turn runs the work on the blocking pool while holding the
//! session's own lock. The session is mutated on a copy and only written
//! back (and logged) when the whole exchange succeeds.

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use intellichain_core::dialogue::SessionStatus;
use intellichain_core::eval::{session_metrics, SessionMetrics};
use intellichain_core::kg::{link_knowledge_points, query_context, ContextBundle};
use intellichain_core::{DialogueSession, Exchange, ProblemInstance, Stage, SystemConfig, Turn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::persist::SnapshotRecord;
use crate::store::Slot;
use crate::AppState;

/// A problem named by id or given inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Id(String),
    Inline(ProblemInstance),
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSessionRequest {
    pub config: String,
    #[serde(default)]
    pub problem: Option<ProblemRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub config: SystemConfig,
    pub stage: Stage,
    pub status: SessionStatus,
    /// The system turn, followed by the instructor opener for agent configs.
    pub transcript: Vec<Turn>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MessageRequest {
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub session: DialogueSession,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone, Deserialize)]
pub struct KgQuery {
    pub point: Option<String>,
    pub hops: Option<u32>,
    pub cap: Option<usize>,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn blocking<T, F>(work: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(work)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn resolve_problem(state: &AppState, problem: Option<ProblemRef>) -> Result<ProblemInstance, ApiError> {
    match problem {
        None => Ok(state.config.problems[0].clone()),
        Some(ProblemRef::Id(id)) => state
            .config
            .problem(&id)
            .cloned()
            .ok_or_else(|| ApiError::bad_request(format!("unknown problem `{id}`"))),
        Some(ProblemRef::Inline(mut p)) => {
            if p.id.is_empty() {
                p.id = "inline".into();
            }
            p.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
            Ok(p)
        }
    }
}

pub async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let request = body(payload)?;
    let config: SystemConfig = request
        .config
        .parse()
        .map_err(|e: intellichain_core::dialogue::DialogueError| ApiError::bad_request(e.to_string()))?;
    let problem = resolve_problem(&state, request.problem)?;
    let id = state.store.allocate_id();

    let created = blocking(move || {
        let backend = state.config.backend.create();
        let (session, _) = state
            .tutor
            .start_session(id, config, problem, backend.as_ref())?;
        state.record(&session, backend.as_ref())?;
        let created = SessionCreated {
            id: session.id.clone(),
            config: session.config,
            stage: session.stage,
            status: session.status,
            transcript: session.transcript.clone(),
        };
        state.store.insert(Slot { session, backend });
        Ok(created)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

pub async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<MessageRequest>, JsonRejection>,
) -> Result<Json<Exchange>, ApiError> {
    let handle = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let request = body(payload)?;
    let mut slot = handle.lock_owned().await;
    if slot.session.status == SessionStatus::Completed {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("session `{id}` is completed")));
    }
    let exchange = blocking(move || {
        let mut session = slot.session.clone();
        let exchange = state
            .tutor
            .respond(&mut session, slot.backend.as_ref(), &request.text)?;
        state.record(&session, slot.backend.as_ref())?;
        slot.session = session;
        Ok(exchange)
    })
    .await?;
    Ok(Json(exchange))
}

pub async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let handle = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let session = handle.lock().await.session.clone();
    let metrics = session_metrics(&session);
    Ok(Json(SessionView { session, metrics }))
}

pub async fn query_kg(
    State(state): State<AppState>,
    query: Result<Query<KgQuery>, QueryRejection>,
) -> Result<Json<ContextBundle>, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let point = query.point.unwrap_or_default();
    if point.trim().is_empty() {
        return Err(ApiError::bad_request("`point` must not be empty"));
    }
    let defaults = state.config.settings.retrieval;
    let graph = state.tutor.graph();
    let seeds = link_knowledge_points(&point, graph);
    let bundle = query_context(
        graph,
        &seeds,
        query.hops.unwrap_or(defaults.hop_limit),
        query.cap.unwrap_or(defaults.cap),
    )
    .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(bundle))
}

pub async fn list_problems(State(state): State<AppState>) -> Json<Vec<ProblemInstance>> {
    Json(state.config.problems.clone())
}

pub async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "backend": state.config.backend_kind,
        "sessions": state.store.len(),
        "nodes": state.tutor.graph().nodes().len(),
    }))
}

impl AppState {
    /// Appends a snapshot to the session log, if one is configured.
    fn record(
        &self,
        session: &DialogueSession,
        backend: &dyn intellichain_core::agent::CompletionBackend,
    ) -> Result<(), ApiError> {
        if let Some(log) = &self.log {
            log.append(&SnapshotRecord {
                session: session.clone(),
                checkpoint: backend.checkpoint(),
            })?;
        }
        Ok(())
    }
}
