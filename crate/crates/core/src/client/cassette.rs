//! Record/replay of request-response pairs for offline, reproducible runs.
//!
//! A cassette is JSONL, one [`CassetteEntry`] per line, sorted by key. The
//! key is the SHA-256 of the canonical request body (model, prompt,
//! temperature, max tokens, stop list).

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::http::build_request_body;
use super::{ClientError, GenerationClient, GenerationRequest};
use crate::jsonl::{read_records, write_records};
use crate::seed::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: String,
    pub model: String,
    pub request: GenerationRequest,
    pub response: String,
}

pub fn request_fingerprint(model: &str, req: &GenerationRequest) -> String {
    sha256_hex(build_request_body(model, req).to_string().as_bytes())
}

/// Forwards to an inner client and remembers every successful exchange.
pub struct RecordingClient<C> {
    inner: C,
    path: PathBuf,
    entries: Mutex<BTreeMap<String, CassetteEntry>>,
}

impl<C: GenerationClient> RecordingClient<C> {
    pub fn new(inner: C, path: impl Into<PathBuf>) -> Self {
        RecordingClient {
            inner,
            path: path.into(),
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cassette poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the cassette, overwriting any previous file.
    pub fn save(&self) -> Result<(), ClientError> {
        let entries: Vec<CassetteEntry> = self.entries.lock().expect("cassette poisoned").values().cloned().collect();
        write_records(&self.path, &entries).map_err(|e| ClientError::Cassette(e.to_string()))
    }
}

impl<C: GenerationClient> GenerationClient for RecordingClient<C> {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        let response = self.inner.complete(req)?;
        let model = self.inner.model_id().to_string();
        let key = request_fingerprint(&model, req);
        self.entries.lock().expect("cassette poisoned").insert(
            key.clone(),
            CassetteEntry {
                key,
                model,
                request: req.clone(),
                response: response.clone(),
            },
        );
        Ok(response)
    }

    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn max_concurrency(&self) -> usize {
        self.inner.max_concurrency()
    }
}

/// Serves responses from a cassette; never touches the network. Unknown
/// requests fail with [`ClientError::CassetteMiss`].
#[derive(Debug)]
pub struct ReplayClient {
    model_id: String,
    entries: HashMap<String, String>,
    served: AtomicUsize,
}

impl ReplayClient {
    pub fn from_entries(model_id: impl Into<String>, entries: Vec<CassetteEntry>) -> Self {
        ReplayClient {
            model_id: model_id.into(),
            entries: entries.into_iter().map(|e| (e.key, e.response)).collect(),
            served: AtomicUsize::new(0),
        }
    }

    /// Loads a cassette. The model id is taken from `model_id`, or from the
    /// entries when they agree on one.
    pub fn load(path: &Path, model_id: Option<&str>) -> Result<Self, ClientError> {
        let entries: Vec<CassetteEntry> =
            read_records(path).map_err(|e| ClientError::Cassette(e.to_string()))?;
        let model = match model_id {
            Some(m) => m.to_string(),
            None => {
                let mut models: Vec<&str> = entries.iter().map(|e| e.model.as_str()).collect();
                models.sort_unstable();
                models.dedup();
                match models.as_slice() {
                    [one] => one.to_string(),
                    [] => String::from("replay"),
                    _ => {
                        return Err(ClientError::Cassette(format!(
                            "{} holds several models ({}); pass the model id explicitly",
                            path.display(),
                            models.join(", ")
                        )))
                    }
                }
            }
        };
        Ok(Self::from_entries(model, entries))
    }

    pub fn served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }
}

impl GenerationClient for ReplayClient {
    fn complete(&self, req: &GenerationRequest) -> Result<String, ClientError> {
        let key = request_fingerprint(&self.model_id, req);
        let hit = self
            .entries
            .get(&key)
            .cloned()
            .ok_or(ClientError::CassetteMiss(key))?;
        self.served.fetch_add(1, Ordering::SeqCst);
        Ok(hit)
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn max_concurrency(&self) -> usize {
        4
    }
}
