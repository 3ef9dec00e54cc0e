//! Oracles, fixtures and generators shared by integration tests and the
//! acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use attrib_core::client::{FnClient, GenerationRequest};
use attrib_core::retrieval::Passage;
use attrib_core::simulate::QaRecord;
use attrib_core::{AttributionLabel, PromptVariant};
use proptest::prelude::*;

pub fn core_dir() -> PathBuf {
    let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    if here.ends_with("core") {
        here
    } else {
        here.parent().expect("crates dir").join("core")
    }
}

pub fn fixture(name: &str) -> PathBuf {
    core_dir().join("tests").join("fixtures").join(name)
}

pub const INSTRUCTION: &str = "As an Attribution Validator, your task is to verify whether a given context can support the claim. A claim can be either a plain sentence or a question followed by its answer. Specifically, your response should clearly indicate the relationship: Attributable, Contradictory or Extrapolatory. A contradictory error occurs when you can infer that the answer contradicts the fact presented in the context, while an extrapolatory error means that you cannot infer the correctness of the answer based on the information provided in the context.";

// ---- BM25 and containment oracles ----

pub fn oracle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Brute-force Okapi BM25: every document against every query token.
/// Returns (doc_id, score) for positive scores, best first, ties by id.
pub fn oracle_bm25(corpus: &[(String, String)], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = corpus.iter().map(|(_, t)| oracle_tokens(t)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let mut out = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        let mut score = 0.0;
        for q in oracle_tokens(query) {
            let tf = doc.iter().filter(|t| **t == q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.contains(&q)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * doc.len() as f64 / avg));
        }
        if score > 0.0 {
            out.push((corpus[i].0.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// Does any answer occur in `text` as a contiguous token run?
pub fn oracle_contains(text: &str, answers: &[String]) -> bool {
    let hay = oracle_tokens(text);
    answers.iter().any(|a| {
        let needle = oracle_tokens(a);
        !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle.as_slice())
    })
}

// ---- generators ----

const VOCAB: &[&str] = &[
    "paris", "france", "capital", "river", "seine", "the", "of", "is", "city", "tower", "eiffel", "1889", "Paris",
    "LOUVRE", "museum", "art",
];
const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", ". ", "-", " (", ") "];

fn text_of(words: Vec<(usize, usize)>) -> String {
    let mut s = String::new();
    for (i, (w, sep)) in words.into_iter().enumerate() {
        if i > 0 {
            s.push_str(SEPARATORS[sep]);
        }
        s.push_str(VOCAB[w]);
    }
    s
}

pub fn text_strategy(max_words: usize) -> impl Strategy<Value = String> {
    prop::collection::vec((0..VOCAB.len(), 0..SEPARATORS.len()), 1..=max_words).prop_map(text_of)
}

/// Corpus of 1..=`max_docs` passages with ids that do not sort in insertion order.
pub fn corpus_strategy(max_docs: usize, max_words: usize) -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(text_strategy(max_words), 1..=max_docs).prop_map(|texts| {
        texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| (format!("d{}", (i * 7919) % 1000 + i * 1000), t))
            .collect()
    })
}

pub fn passages(corpus: &[(String, String)]) -> Vec<Passage> {
    corpus
        .iter()
        .map(|(id, text)| Passage {
            doc_id: id.clone(),
            text: text.clone(),
        })
        .collect()
}

// ---- fixtures ----

pub fn label_mapping_rows() -> Vec<(String, String, AttributionLabel)> {
    let text = std::fs::read_to_string(fixture("label_mapping.tsv")).expect("label mapping fixture");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 3, "bad fixture row {l:?}");
            (cols[0].to_string(), cols[1].to_string(), cols[2].parse().expect("label"))
        })
        .collect()
}

pub struct ExtractionCase {
    pub variant: PromptVariant,
    pub response: String,
    pub expected: Option<AttributionLabel>,
}

pub fn extraction_cases() -> Vec<ExtractionCase> {
    let text = std::fs::read_to_string(fixture("extraction.jsonl")).expect("extraction fixture");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).expect("json");
            ExtractionCase {
                variant: v["variant"].as_str().unwrap().parse().unwrap(),
                response: v["response"].as_str().unwrap().to_string(),
                expected: v["expected"].as_str().map(|s| s.parse().unwrap()),
            }
        })
        .collect()
}

// ---- simulation ----

const FIRST: &[&str] = &["Ada", "Boris", "Chen", "Dalia", "Emeka", "Farah", "Goran", "Hana"];
const LAST: &[&str] = &["Lovelace", "Petrov", "Wei", "Haddad", "Okafor", "Nasser", "Ilic", "Sato"];

/// `n` QA records plus a corpus holding each record's positive passage and
/// two same-topic passages without the answer.
pub fn synthetic_qa(n: usize) -> (Vec<QaRecord>, Vec<Passage>) {
    let mut records = Vec::new();
    let mut corpus = Vec::new();
    for i in 0..n {
        let answer = format!("{} {}", FIRST[i % FIRST.len()], LAST[(i / FIRST.len()) % LAST.len()]);
        let question = format!("Who founded settlement{i} near lake{i}?");
        let context = format!("Settlement{i} lies near lake{i}. It was founded by {answer} in {}.", 1700 + i);
        corpus.push(Passage {
            doc_id: format!("pos{i}"),
            text: context.clone(),
        });
        corpus.push(Passage {
            doc_id: format!("neg{i}a"),
            text: format!("Settlement{i} near lake{i} is known for fishing and founded markets."),
        });
        corpus.push(Passage {
            doc_id: format!("neg{i}b"),
            text: format!("Lake{i} freezes in winter; who visits settlement{i} then?"),
        });
        records.push(QaRecord::new(format!("q{i}"), question, vec![answer], context, "synthetic").unwrap());
    }
    (records, corpus)
}

/// Deterministic substituter. The first (greedy) attempt of the QA-model
/// prompt echoes the founder from the context, which forces a retry.
pub fn mock_substituter() -> FnClient<impl Fn(&GenerationRequest) -> Result<String, attrib_core::client::ClientError> + Send + Sync>
{
    FnClient::new("mock-substituter", |r: &GenerationRequest| {
        let p = &r.prompt;
        if let Some(rest) = p.rsplit("Input: ").next().filter(|_| p.starts_with("Please provide")) {
            let original = rest.trim_end_matches("; Output: ");
            return Ok(format!("Not {original};\nInput: x"));
        }
        if p.starts_with("Extract a phrase") {
            return Ok("lake district".into());
        }
        if p.starts_with("Context: ") {
            if r.temperature == 0.0 {
                let founder = p.split("founded by ").nth(1).and_then(|s| s.split(" in ").next()).unwrap_or("nobody");
                return Ok(founder.to_string());
            }
            return Ok("Someone Else".into());
        }
        Ok(String::new())
    })
}

/// Smallest [lo, hi] with P(X < lo) <= alpha/2 and P(X > hi) <= alpha/2
/// for X ~ Binomial(n, p), from the exact pmf.
pub fn binomial_interval(n: u64, p: f64, confidence: f64) -> (u64, u64) {
    let tail = (1.0 - confidence) / 2.0;
    let mut pmf = vec![0.0f64; n as usize + 1];
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 1..=n as usize {
        pmf[k] = pmf[k - 1] * ((n as usize - k + 1) as f64 / k as f64) * (p / (1.0 - p));
    }
    let mut lo = 0;
    let mut below = 0.0;
    while below + pmf[lo] <= tail {
        below += pmf[lo];
        lo += 1;
    }
    let mut hi = n as usize;
    let mut above = 0.0;
    while above + pmf[hi] <= tail {
        above += pmf[hi];
        hi -= 1;
    }
    (lo as u64, hi as u64)
}

pub fn counts_by<K: Ord>(keys: impl IntoIterator<Item = K>) -> Vec<(K, usize)> {
    let mut m: BTreeMap<K, usize> = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_default() += 1;
    }
    m.into_iter().collect()
}
