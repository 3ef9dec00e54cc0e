//! Per-family input schemas for source datasets.
//!
//! | family         | fields                                                        |
//! |----------------|---------------------------------------------------------------|
//! | fact-checking  | `id`, `claim`, `evidence` (string or list of strings), `label` |
//! | NLI            | `id`, `premise`, `hypothesis`, `label`                         |
//! | summarization  | `id`, `summary`, `article`, `label`                            |
//!
//! Any other string-valued field (for example `article_id` for SciFact) is
//! carried along in `SourceRecord::extra`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{Dataset, Evidence, Family, RepurposeError, SourceRecord};
use crate::jsonl::read_values;

#[derive(Deserialize)]
struct FactCheckingLine {
    id: Value,
    claim: String,
    #[serde(default)]
    evidence: Option<Evidence>,
    label: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct NliLine {
    id: Value,
    premise: String,
    hypothesis: String,
    label: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct SummarizationLine {
    id: Value,
    summary: String,
    #[serde(alias = "source", alias = "document")]
    article: String,
    label: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn extra_strings(extra: BTreeMap<String, Value>) -> BTreeMap<String, String> {
    extra
        .into_iter()
        .filter_map(|(k, v)| scalar_string(&v).map(|s| (k, s)))
        .collect()
}

/// Parses one input line for `dataset`.
pub fn parse_source_line(dataset: Dataset, value: Value, line: usize) -> Result<SourceRecord, RepurposeError> {
    let err = |message: String| RepurposeError::Input { line, message };
    let (id, claim, evidence, label, extra) = match dataset.family() {
        Family::FactChecking => {
            let l: FactCheckingLine = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
            let evidence = l.evidence.unwrap_or(Evidence::Text(String::new()));
            (l.id, l.claim, evidence, l.label, l.extra)
        }
        Family::Nli => {
            let l: NliLine = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
            (l.id, l.hypothesis, Evidence::Text(l.premise), l.label, l.extra)
        }
        Family::Summarization => {
            let l: SummarizationLine = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
            (l.id, l.summary, Evidence::Text(l.article), l.label, l.extra)
        }
    };
    let id = scalar_string(&id).ok_or_else(|| err("id must be a string or number".into()))?;
    if label.trim().is_empty() {
        return Err(err(format!("record {id:?}: empty label")));
    }
    Ok(SourceRecord {
        id,
        dataset,
        claim,
        evidence,
        original_label: label,
        extra: extra_strings(extra),
    })
}

pub fn read_source_records(dataset: Dataset, path: &Path) -> Result<Vec<SourceRecord>, RepurposeError> {
    let values = read_values(path).map_err(|e| RepurposeError::Input {
        line: 0,
        message: e.to_string(),
    })?;
    values
        .into_iter()
        .map(|(line, v)| parse_source_line(dataset, v, line))
        .collect()
}
