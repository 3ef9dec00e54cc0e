//! Chat-completion HTTP client with retry, backoff and request pacing.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ratelimit::RateLimiter;
use super::{ClientError, GenerationClient, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Sleep before attempt `attempt + 1`, where `attempt` is 1-based.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(attempt.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

/// Where and how to reach a chat-completion endpoint.
///
/// The credential is named by environment variable and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_id: String,
    /// Environment variable holding the bearer token; `None` sends no
    /// Authorization header.
    pub credential_env: Option<String>,
    pub max_concurrency: usize,
    /// 0 disables pacing.
    pub requests_per_minute: u32,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model_id: "gpt-3.5-turbo".into(),
            credential_env: Some("OPENAI_API_KEY".into()),
            max_concurrency: 4,
            requests_per_minute: 0,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_concurrency == 0 {
            return Err(ClientError::InvalidConfig("max_concurrency must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(ClientError::InvalidConfig("retry.max_attempts must be at least 1".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(ClientError::InvalidConfig("base_url is empty".into()));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Connection-level failure (DNS, refused, reset, timeout). Always retried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError(pub String);

/// Sends one JSON POST. Split out so retry logic can be tested offline.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpResponse, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send(body).map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// `{model, messages: [{role: "user", content}], temperature, max_tokens[, stop]}`
pub fn build_request_body(model: &str, req: &GenerationRequest) -> Value {
    let mut body = json!({
        "model": model,
        "messages": [{"role": "user", "content": req.prompt}],
        "temperature": req.temperature,
        "max_tokens": req.max_new_tokens,
    });
    if let Some(stop) = &req.stop {
        body["stop"] = json!(stop);
    }
    body
}

/// Extracts `choices[0].message.content`.
pub fn parse_response_body(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ClientError::Malformed("missing choices[0].message.content".into()))
}

pub struct HttpClient {
    config: EndpointConfig,
    credential: Option<String>,
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
    sent: AtomicU64,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("config", &self.config)
            .field("sent", &self.sent.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        let transport = UreqTransport::new(Duration::from_secs(config.timeout_secs.max(1)));
        Self::with_transport(config, Box::new(transport))
    }

    /// Resolves the credential up front: a configured but unset variable is
    /// an authentication error before any request goes out.
    pub fn with_transport(config: EndpointConfig, transport: Box<dyn Transport>) -> Result<Self, ClientError> {
        config.validate()?;
        let credential = match &config.credential_env {
            None => None,
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.trim().is_empty() => Some(v),
                _ => {
                    return Err(ClientError::Auth(format!(
                        "environment variable {var} is not set"
                    )))
                }
            },
        };
        let limiter = RateLimiter::per_minute(config.requests_per_minute);
        Ok(HttpClient {
            config,
            credential,
            transport,
            limiter,
            sent: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Number of HTTP requests actually sent, including retries.
    pub fn requests_sent(&self) -> u64 {
        self.sent.load(Ordering::SeqCst)
    }
}

impl GenerationClient for HttpClient {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        req.validate()?;
        let url = self.config.completions_url();
        let body = build_request_body(&self.config.model_id, req).to_string();
        let policy = &self.config.retry;
        let mut last_status = None;
        let mut last_message = String::new();
        for attempt in 1..=policy.max_attempts {
            self.limiter.acquire();
            self.sent.fetch_add(1, Ordering::SeqCst);
            match self.transport.post_json(&url, self.credential.as_deref(), &body) {
                Ok(resp) if (200..300).contains(&resp.status) => return parse_response_body(&resp.body),
                Ok(resp) if resp.status == 401 || resp.status == 403 => {
                    return Err(ClientError::Auth(format!("HTTP {}: {}", resp.status, resp.body)))
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_status = Some(resp.status);
                    last_message = resp.body;
                }
                Ok(resp) => {
                    return Err(ClientError::Http {
                        status: resp.status,
                        body: resp.body,
                    })
                }
                Err(TransportError(msg)) => {
                    last_status = None;
                    last_message = msg;
                }
            }
            if attempt < policy.max_attempts {
                thread::sleep(policy.backoff(attempt));
            }
        }
        Err(ClientError::RetriesExhausted {
            attempts: policy.max_attempts,
            last_status,
            message: last_message,
        })
    }

    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn max_concurrency(&self) -> usize {
        self.config.max_concurrency
    }
}
