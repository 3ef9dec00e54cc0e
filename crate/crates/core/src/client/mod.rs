//! Chat-completion clients shared by the evaluator and the simulators.
//!
//! Every backend implements [`GenerationClient`]: the HTTP client with
//! retries and rate limiting ([`HttpClient`]), canned-response mocks for
//! tests ([`MockClient`], [`FnClient`]), and record/replay cassettes
//! ([`RecordingClient`], [`ReplayClient`]).

mod cassette;
mod http;
mod mock;
mod ratelimit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pool::map_bounded;

pub use cassette::{request_fingerprint, CassetteEntry, RecordingClient, ReplayClient};
pub use http::{
    build_request_body, parse_response_body, EndpointConfig, HttpClient, HttpResponse, RetryPolicy,
    Transport, TransportError, UreqTransport,
};
pub use mock::{FnClient, MockClient};
pub use ratelimit::RateLimiter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_new_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
}

impl GenerationRequest {
    /// Greedy (temperature 0) request.
    pub fn new(prompt: impl Into<String>, max_new_tokens: u32) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            max_new_tokens,
            temperature: 0.0,
            stop: None,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.prompt.is_empty() {
            return Err(ClientError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(ClientError::InvalidRequest("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ClientError::InvalidRequest(format!(
                "temperature must be a finite value >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("gave up after {attempts} attempts (last status: {}): {message}", last_status.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))]
    RetriesExhausted {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("no recorded response for request {0}")]
    CassetteMiss(String),
    #[error("cassette: {0}")]
    Cassette(String),
    #[error("mock: {0}")]
    Mock(String),
}

/// A text-generation endpoint.
pub trait GenerationClient: Send + Sync {
    /// Returns the first candidate's text verbatim.
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError>;

    fn model_id(&self) -> &str;

    /// Upper bound on simultaneous requests for batch calls.
    fn max_concurrency(&self) -> usize {
        1
    }
}

impl<C: GenerationClient + ?Sized> GenerationClient for &C {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        (**self).complete(req)
    }

    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
}

impl<C: GenerationClient + ?Sized> GenerationClient for Box<C> {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        (**self).complete(req)
    }

    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
}

/// Runs every request with at most `client.max_concurrency()` in flight.
/// Results line up with `reqs`; one failure never affects the others.
pub fn complete_batch<C: GenerationClient + ?Sized>(
    client: &C,
    reqs: &[GenerationRequest],
) -> Vec<Result<String, ClientError>> {
    map_bounded(reqs, client.max_concurrency(), |r| client.complete(r))
}
