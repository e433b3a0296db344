use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use intellichain_core::agent::AgentError;
use intellichain_core::dialogue::DialogueError;
use intellichain_core::TutorError;
use serde_json::json;

use crate::persist::LogError;

/// An error response: `{"error": message}` with the given status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<TutorError> for ApiError {
    fn from(err: TutorError) -> Self {
        let status = match &err {
            TutorError::Dialogue(
                DialogueError::InvalidProblem(_) | DialogueError::UnknownConfig(_),
            )
            | TutorError::Eval(_) => StatusCode::BAD_REQUEST,
            TutorError::Dialogue(
                DialogueError::SessionCompleted | DialogueError::RoleOrderViolation { .. },
            ) => StatusCode::CONFLICT,
            TutorError::Agent(AgentError::BackendFailure(_)) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, err.to_string())
    }
}

impl From<LogError> for ApiError {
    fn from(err: LogError) -> Self {
        Self::internal(err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}
