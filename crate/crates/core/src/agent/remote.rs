//! Chat-completions client.
//!
//! Posts `{"model", "messages", "temperature", "max_tokens"}` to
//! `<base_url>/chat/completions` with a bearer credential and reads
//! `choices[0].message.content` from the response.

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde::Serialize;

use super::backend::{
    BackendError, BackendFactory, ChatMessage, CompletionBackend, CompletionRequest,
};

pub const API_KEY_ENV: &str = "INTELLICHAIN_API_KEY";
pub const BASE_URL_ENV: &str = "INTELLICHAIN_BASE_URL";

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

/// Exact JSON body sent for `request`.
pub fn wire_body(model: &str, request: &CompletionRequest) -> String {
    serde_json::to_string(&WireRequest {
        model,
        messages: &request.messages,
        temperature: request.temperature,
        max_tokens: request.max_tokens,
    })
    .expect("request serializes")
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    /// Built on first use: a blocking client must not be created (or
    /// dropped) on an async runtime thread.
    client: OnceLock<reqwest::blocking::Client>,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl RemoteBackend {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            client: OnceLock::new(),
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            model: model.into(),
            api_key,
        }
    }

    /// Reads the base URL and credential from the environment.
    pub fn from_env(model: impl Into<String>) -> Result<Self, BackendError> {
        let base_url = std::env::var(BASE_URL_ENV)
            .map_err(|_| BackendError::Config(format!("{BASE_URL_ENV} is not set")))?;
        Ok(Self::new(base_url, model, std::env::var(API_KEY_ENV).ok()))
    }

    /// True when both environment variables are present.
    pub fn env_configured() -> bool {
        std::env::var_os(BASE_URL_ENV).is_some() && std::env::var_os(API_KEY_ENV).is_some()
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }

    fn client(&self) -> Result<&reqwest::blocking::Client, BackendError> {
        if let Some(client) = self.client.get() {
            return Ok(client);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(self.client.get_or_init(|| client))
    }
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let mut call = self
            .client()?
            .post(self.endpoint())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(wire_body(&self.model, request));
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let value: serde_json::Value = serde_json::from_str(&body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(serde_json::Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| {
                BackendError::MalformedResponse("missing choices[0].message.content".into())
            })
    }
}

impl BackendFactory for RemoteBackend {
    fn create(&self) -> Arc<dyn CompletionBackend> {
        Arc::new(Self::new(self.base_url.clone(), self.model.clone(), self.api_key.clone()))
    }
}
