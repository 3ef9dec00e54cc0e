//! Deterministic in-process endpoints for tests and offline runs.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Deserialize;

use super::{ClientError, GenerationClient, GenerationRequest};
use crate::jsonl::read_values;
use crate::seed::sha256_hex;

/// Canned responses keyed by SHA-256 of the prompt, with an optional default.
#[derive(Debug, Default)]
pub struct MockClient {
    model_id: String,
    table: HashMap<String, String>,
    default: Option<String>,
    calls: AtomicUsize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MockLine {
    Hashed { prompt_sha256: String, response: String },
    Plain { prompt: String, response: String },
    Default { default: String },
}

impl MockClient {
    pub fn new(model_id: impl Into<String>) -> Self {
        MockClient {
            model_id: model_id.into(),
            ..Default::default()
        }
    }

    pub fn with_response(mut self, prompt: &str, response: impl Into<String>) -> Self {
        self.table.insert(sha256_hex(prompt.as_bytes()), response.into());
        self
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    /// Loads a JSONL table. Each line is one of
    /// `{"prompt_sha256": .., "response": ..}`, `{"prompt": .., "response": ..}`
    /// or `{"default": ..}`.
    pub fn from_file(model_id: impl Into<String>, path: &Path) -> Result<Self, ClientError> {
        let mut mock = MockClient::new(model_id);
        let values = read_values(path).map_err(|e| ClientError::Mock(e.to_string()))?;
        for (line, v) in values {
            let parsed: MockLine = serde_json::from_value(v)
                .map_err(|e| ClientError::Mock(format!("{}:{line}: {e}", path.display())))?;
            match parsed {
                MockLine::Hashed { prompt_sha256, response } => {
                    mock.table.insert(prompt_sha256.to_lowercase(), response);
                }
                MockLine::Plain { prompt, response } => {
                    mock.table.insert(sha256_hex(prompt.as_bytes()), response);
                }
                MockLine::Default { default } => mock.default = Some(default),
            }
        }
        Ok(mock)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GenerationClient for MockClient {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        req.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = sha256_hex(req.prompt.as_bytes());
        self.table
            .get(&key)
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| ClientError::Mock(format!("no canned response for prompt {key}")))
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn max_concurrency(&self) -> usize {
        4
    }
}

/// Endpoint backed by a closure.
pub struct FnClient<F> {
    model_id: String,
    concurrency: usize,
    f: F,
    calls: AtomicUsize,
}

impl<F> FnClient<F>
where
    F: Fn(&GenerationRequest) -> Result<String, ClientError> + Send + Sync,
{
    pub fn new(model_id: impl Into<String>, f: F) -> Self {
        FnClient {
            model_id: model_id.into(),
            concurrency: 1,
            f,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.concurrency = n.max(1);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> GenerationClient for FnClient<F>
where
    F: Fn(&GenerationRequest) -> Result<String, ClientError> + Send + Sync,
{
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        req.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(req)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn max_concurrency(&self) -> usize {
        self.concurrency
    }
}
