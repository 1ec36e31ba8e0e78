//! Endpoint clients.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::wire::{decode_response, encode_request, ChatRequest, ChatResponse};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("endpoint does not support this request: {0}")]
    Unsupported(String),
}

impl EndpointError {
    pub fn is_retriable(&self) -> bool {
        match self {
            EndpointError::Timeout | EndpointError::Transport(_) | EndpointError::Malformed(_) => true,
            EndpointError::Http { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            EndpointError::Unsupported(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub response: ChatResponse,
    pub latency_ms: u64,
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, EndpointError>;

    /// Whether a trailing assistant message can be continued in place.
    fn supports_continuation(&self) -> bool {
        false
    }
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, EndpointError> {
        (**self).complete(request)
    }

    fn supports_continuation(&self) -> bool {
        (**self).supports_continuation()
    }
}

/// Connection settings. The API key itself is read from the named
/// environment variable and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub supports_continuation: bool,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            api_key_env: Some("MUSOBENCH_API_KEY".into()),
            timeout_secs: 600,
            supports_continuation: false,
        }
    }
}

pub struct HttpChatClient {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    continuation: bool,
}

impl HttpChatClient {
    pub fn new(config: &EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        Self {
            agent,
            url: config.url.clone(),
            api_key,
            continuation: config.supports_continuation,
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, EndpointError> {
        let started = Instant::now();
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = call.send(encode_request(request)).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(map_ureq)?;
        if !(200..300).contains(&status) {
            return Err(EndpointError::Http { status, body });
        }
        let response = decode_response(&body).map_err(EndpointError::Malformed)?;
        Ok(Completion {
            response,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }

    fn supports_continuation(&self) -> bool {
        self.continuation
    }
}

fn map_ureq(e: ureq::Error) -> EndpointError {
    match e {
        ureq::Error::Timeout(_) => EndpointError::Timeout,
        ureq::Error::StatusCode(status) => EndpointError::Http {
            status,
            body: String::new(),
        },
        other => EndpointError::Transport(other.to_string()),
    }
}
