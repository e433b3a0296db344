//! HTTP service for live tutoring sessions.
//!
//! | Method | Path                          | Purpose                                  |
//! |--------|-------------------------------|------------------------------------------|
//! | POST   | `/api/sessions`               | start a session (`{config, problem?}`)   |
//! | POST   | `/api/sessions/{id}/messages` | send a learner message (`{text}`)        |
//! | GET    | `/api/sessions/{id}`          | transcript, stage, config and metrics    |
//! | GET    | `/api/kg/query`               | `?point=&hops=&cap=` graph retrieval     |
//! | GET    | `/api/problems`               | configured problems                      |
//! | GET    | `/api/health`                 | liveness                                 |
//!
//! Anything else is served from the configured static directory, if any.

pub mod api;
pub mod error;
pub mod persist;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use intellichain_core::{AppConfig, Tutor, TutorError};
use thiserror::Error;
use tower_http::services::ServeDir;

use persist::{LogError, SessionLog};
use store::{SessionStore, Slot};

pub use error::ApiError;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Tutor(#[from] TutorError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(#[source] std::io::Error),
}

/// Shared handler state.
#[derive(Clone)]
pub struct AppState {
    pub config: Arc<AppConfig>,
    pub tutor: Arc<Tutor>,
    pub store: Arc<SessionStore>,
    pub log: Option<Arc<SessionLog>>,
}

impl AppState {
    /// Builds the state, replaying the session log when one is configured.
    pub fn new(config: AppConfig) -> Result<Self, ServerError> {
        let tutor = Tutor::new(
            Arc::clone(&config.graph),
            config.arms.clone(),
            config.settings,
        )?;
        let store = SessionStore::new();
        let log = match &config.log_path {
            Some(path) => {
                let (log, restored) = SessionLog::open(path)?;
                for record in restored {
                    store.observe_id(&record.session.id);
                    store.insert(Slot {
                        backend: config.backend.resume(record.checkpoint),
                        session: record.session,
                    });
                }
                Some(Arc::new(log))
            }
            None => None,
        };
        Ok(Self {
            config: Arc::new(config),
            tutor: Arc::new(tutor),
            store: Arc::new(store),
            log,
        })
    }
}

pub fn router(state: AppState) -> Router {
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/sessions", post(api::create_session))
        .route("/api/sessions/{id}", get(api::get_session))
        .route("/api/sessions/{id}/messages", post(api::post_message))
        .route("/api/kg/query", get(api::query_kg))
        .route("/api/problems", get(api::list_problems))
        .route("/api/health", get(api::health))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and returns the listener with its resolved address.
pub async fn bind(addr: &str) -> Result<(tokio::net::TcpListener, SocketAddr), ServerError> {
    let bind_err = |source| ServerError::Bind {
        addr: addr.to_owned(),
        source,
    };
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(bind_err)?;
    let local = listener.local_addr().map_err(bind_err)?;
    Ok((listener, local))
}

/// Serves until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> Result<(), ServerError> {
    axum::serve(listener, router(state))
        .await
        .map_err(ServerError::Serve)
}

/// A server on its own runtime, for callers without one (tests, tools).
/// Dropping it shuts the server down.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    runtime: Option<tokio::runtime::Runtime>,
}

impl BackgroundServer {
    /// Starts serving `state` on an ephemeral localhost port.
    pub fn start(state: AppState) -> Result<Self, ServerError> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(ServerError::Serve)?;
        let (listener, addr) = runtime.block_on(bind("127.0.0.1:0"))?;
        runtime.spawn(serve(listener, state));
        Ok(Self {
            addr,
            runtime: Some(runtime),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}
