use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: ChatRole, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        match self.messages.first() {
            None => return Err(BackendError::InvalidRequest("messages are empty".into())),
            Some(m) if m.role != ChatRole::System => {
                return Err(BackendError::InvalidRequest(
                    "first message must have the system role".into(),
                ))
            }
            Some(_) => {}
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} is outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn last_user_message(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("scripted backend exhausted after {consumed} responses")]
    ScriptExhausted { consumed: usize },
    #[error("no scripted rule matched and no scripted responses are configured")]
    NoRuleMatched,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("completion endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

/// Anything that can turn a chat request into assistant text.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;

    /// Opaque position of a stateful backend, used to resume it after a
    /// restart. Stateless backends return `None`.
    fn checkpoint(&self) -> Option<u64> {
        None
    }
}

/// Validates `request` and forwards it to `backend`.
pub fn complete(
    backend: &dyn CompletionBackend,
    request: &CompletionRequest,
) -> Result<String, BackendError> {
    request.validate()?;
    backend.complete(request)
}

/// Hands out one backend per session.
pub trait BackendFactory: Send + Sync {
    fn create(&self) -> Arc<dyn CompletionBackend>;

    /// Recreates a backend at a position previously reported by
    /// [`CompletionBackend::checkpoint`].
    fn resume(&self, checkpoint: Option<u64>) -> Arc<dyn CompletionBackend> {
        let _ = checkpoint;
        self.create()
    }
}

impl<F> BackendFactory for F
where
    F: Fn() -> Arc<dyn CompletionBackend> + Send + Sync,
{
    fn create(&self) -> Arc<dyn CompletionBackend> {
        self()
    }
}
