//! Lexical retrieval: tokenizer, BM25 index, and evidence selection.

mod evidence;
mod index;
mod tokenize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use evidence::{
    contains_answer, overlap_ratio, select_negative, select_positive, text_contains_answer,
    DEFAULT_NEGATIVE_DEPTH,
};
pub use index::{Bm25Index, Bm25Params, DEFAULT_B, DEFAULT_K1, INDEX_FORMAT_VERSION};
pub use tokenize::{find_subsequence, tokenize, tokenize_with_spans, Token};

/// A retrievable document. Corpus files hold one `{"doc_id","text"}` per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Passage {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPassage {
    pub passage: Passage,
    pub score: f64,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate doc_id {0:?} in corpus")]
    DuplicateDocId(String),
    #[error("passage {0:?} has empty text")]
    EmptyPassage(String),
    #[error("invalid BM25 parameters k1={k1}, b={b} (need k1 > 0 and 0 <= b <= 1)")]
    InvalidParams { k1: f64, b: f64 },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("malformed index: {0}")]
    Format(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
