//! Okapi BM25 over an in-memory passage corpus.
//!
//! ```text
//! score(D, Q) = sum over query tokens q of
//!     IDF(q) * tf(q, D) * (k1 + 1) / (tf(q, D) + k1 * (1 - b + b * |D| / avgdl))
//! IDF(q)      = ln((N - df(q) + 0.5) / (df(q) + 0.5) + 1)
//! ```
//!
//! The `+ 1` inside the logarithm keeps every IDF strictly positive, so a
//! document scores above zero exactly when it shares a token with the query.
//! Repeated query tokens contribute once per occurrence.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::{Passage, RetrievalError, ScoredPassage};

pub const INDEX_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// Immutable BM25 index. Build once, then share freely between readers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    passages: Vec<Passage>,
    doc_lens: Vec<u32>,
    avg_len: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Serialize, Deserialize)]
struct PersistedIndex {
    format_version: u32,
    index: Bm25Index,
}

impl Bm25Index {
    pub fn build(corpus: Vec<Passage>, params: Bm25Params) -> Result<Self, RetrievalError> {
        if !(params.k1 > 0.0 && params.k1.is_finite()) || !(0.0..=1.0).contains(&params.b) {
            return Err(RetrievalError::InvalidParams {
                k1: params.k1,
                b: params.b,
            });
        }
        if corpus.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        for p in &corpus {
            if p.text.trim().is_empty() {
                return Err(RetrievalError::EmptyPassage(p.doc_id.clone()));
            }
            if !seen.insert(p.doc_id.as_str()) {
                return Err(RetrievalError::DuplicateDocId(p.doc_id.clone()));
            }
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lens = Vec::with_capacity(corpus.len());
        for (doc, p) in corpus.iter().enumerate() {
            let tokens = tokenize(&p.text);
            doc_lens.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: doc as u32,
                    tf,
                });
            }
        }
        let total: u64 = doc_lens.iter().map(|&l| l as u64).sum();
        let avg_len = total as f64 / corpus.len() as f64;

        Ok(Bm25Index {
            params,
            passages: corpus,
            doc_lens,
            avg_len,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    /// Token count of the passage at `doc` (corpus order).
    pub fn doc_len(&self, doc: usize) -> u32 {
        self.doc_lens[doc]
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.passages.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top `k` passages with positive score, best first; equal scores are
    /// ordered by ascending `doc_id`. `k == 0` yields nothing.
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredPassage> {
        if k == 0 {
            return Vec::new();
        }
        let Bm25Params { k1, b } = self.params;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in tokenize(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for posting in list {
                let tf = posting.tf as f64;
                let len = self.doc_lens[posting.doc as usize] as f64;
                let part = idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / self.avg_len));
                *scores.entry(posting.doc).or_insert(0.0) += part;
            }
        }

        let mut hits: Vec<(u32, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1).then_with(|| {
                self.passages[a.0 as usize]
                    .doc_id
                    .cmp(&self.passages[b.0 as usize].doc_id)
            })
        });
        hits.truncate(k);
        hits.into_iter()
            .map(|(doc, score)| ScoredPassage {
                passage: self.passages[doc as usize].clone(),
                score,
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let persisted = PersistedIndex {
            format_version: INDEX_FORMAT_VERSION,
            index: self.clone(),
        };
        let bytes = serde_json::to_vec(&persisted).map_err(|e| RetrievalError::Format(e.to_string()))?;
        fs::write(path, bytes).map_err(|e| RetrievalError::Io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let bytes = fs::read(path).map_err(|e| RetrievalError::Io(path.display().to_string(), e))?;
        let raw: serde_json::Value =
            serde_json::from_slice(&bytes).map_err(|e| RetrievalError::Format(e.to_string()))?;
        let found = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| RetrievalError::Format("missing format_version".into()))?;
        if found != INDEX_FORMAT_VERSION as u64 {
            return Err(RetrievalError::VersionMismatch {
                found,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let persisted: PersistedIndex =
            serde_json::from_value(raw).map_err(|e| RetrievalError::Format(e.to_string()))?;
        Ok(persisted.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str, text: &str) -> Passage {
        Passage {
            doc_id: id.into(),
            text: text.into(),
        }
    }

    #[test]
    fn single_passage_statistics() {
        let idx = Bm25Index::build(vec![p("d1", "red apple pie")], Bm25Params::default()).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.avg_len(), 3.0);
        let hits = idx.search("apple", 5);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].passage.doc_id, "d1");
        assert!(hits[0].score > 0.0);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            Bm25Index::build(vec![], Bm25Params::default()),
            Err(RetrievalError::EmptyCorpus)
        ));
        assert!(matches!(
            Bm25Index::build(vec![p("a", "x"), p("a", "y")], Bm25Params::default()),
            Err(RetrievalError::DuplicateDocId(id)) if id == "a"
        ));
        assert!(matches!(
            Bm25Index::build(vec![p("a", "x")], Bm25Params { k1: 0.0, b: 0.5 }),
            Err(RetrievalError::InvalidParams { .. })
        ));
        assert!(matches!(
            Bm25Index::build(vec![p("a", "x")], Bm25Params { k1: 1.2, b: 1.5 }),
            Err(RetrievalError::InvalidParams { .. })
        ));
        assert!(matches!(
            Bm25Index::build(vec![p("a", "  ")], Bm25Params::default()),
            Err(RetrievalError::EmptyPassage(_))
        ));
    }

    #[test]
    fn no_shared_terms_gives_nothing() {
        let idx = Bm25Index::build(vec![p("d1", "red apple"), p("d2", "green pear")], Bm25Params::default()).unwrap();
        assert!(idx.search("blue banana", 10).is_empty());
        assert!(idx.search("", 10).is_empty());
        assert!(idx.search("apple", 0).is_empty());
    }

    #[test]
    fn ties_break_by_doc_id() {
        let idx = Bm25Index::build(
            vec![p("zeta", "apple tree"), p("alpha", "apple tree"), p("mid", "apple tree")],
            Bm25Params::default(),
        )
        .unwrap();
        let ids: Vec<_> = idx.search("apple", 3).into_iter().map(|h| h.passage.doc_id).collect();
        assert_eq!(ids, ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn punctuation_only_passage_is_indexed_with_zero_length() {
        let idx = Bm25Index::build(vec![p("a", "--"), p("b", "apple")], Bm25Params::default()).unwrap();
        assert_eq!(idx.doc_len(0), 0);
        assert_eq!(idx.avg_len(), 0.5);
        assert_eq!(idx.search("apple", 5).len(), 1);
    }

    #[test]
    fn save_and_load_preserve_scores() {
        let idx = Bm25Index::build(vec![p("d1", "red apple"), p("d2", "red red pear")], Bm25Params::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.json");
        idx.save(&path).unwrap();
        let loaded = Bm25Index::load(&path).unwrap();
        assert_eq!(loaded, idx);
        assert_eq!(loaded.search("red", 5), idx.search("red", 5));
    }

    #[test]
    fn load_rejects_other_versions() {
        let idx = Bm25Index::build(vec![p("d1", "red apple")], Bm25Params::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.json");
        idx.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replacen("\"format_version\":1", "\"format_version\":99", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            Bm25Index::load(&path),
            Err(RetrievalError::VersionMismatch { found: 99, expected: 1 })
        ));
    }
}
