//! Shared domain types: the three-way label space, examples, and predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Outcome of checking an answer against its cited reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttributionLabel {
    /// The reference fully supports the answer.
    Attributable,
    /// The answer contradicts the reference.
    Contradictory,
    /// The reference lacks the information needed to validate the answer.
    Extrapolatory,
}

impl AttributionLabel {
    pub const ALL: [AttributionLabel; 3] = [
        AttributionLabel::Attributable,
        AttributionLabel::Contradictory,
        AttributionLabel::Extrapolatory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributionLabel::Attributable => "Attributable",
            AttributionLabel::Contradictory => "Contradictory",
            AttributionLabel::Extrapolatory => "Extrapolatory",
        }
    }

    /// Row/column position used by the confusion matrix.
    pub fn index(self) -> usize {
        match self {
            AttributionLabel::Attributable => 0,
            AttributionLabel::Contradictory => 1,
            AttributionLabel::Extrapolatory => 2,
        }
    }
}

impl fmt::Display for AttributionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label {0:?}; expected Attributable, Contradictory or Extrapolatory")]
pub struct UnknownLabel(pub String);

/// Case-insensitive exact match on the canonical label names.
pub fn parse_label(s: &str) -> Result<AttributionLabel, UnknownLabel> {
    AttributionLabel::ALL
        .into_iter()
        .find(|l| l.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| UnknownLabel(s.to_string()))
}

impl FromStr for AttributionLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

/// Prompt family used to query the judging model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptVariant {
    #[serde(rename = "attribution")]
    Attribution,
    #[serde(rename = "fact-checking")]
    FactChecking,
    #[serde(rename = "nli")]
    Nli,
    #[serde(rename = "summarization")]
    Summarization,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 4] = [
        PromptVariant::Attribution,
        PromptVariant::FactChecking,
        PromptVariant::Nli,
        PromptVariant::Summarization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::Attribution => "attribution",
            PromptVariant::FactChecking => "fact-checking",
            PromptVariant::Nli => "nli",
            PromptVariant::Summarization => "summarization",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown prompt variant {0:?}; expected one of: attribution, fact-checking, nli, summarization")]
pub struct UnknownVariant(pub String);

impl FromStr for PromptVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded = s.trim().to_ascii_lowercase().replace('_', "-");
        match folded.as_str() {
            "attribution" | "attr" => Ok(PromptVariant::Attribution),
            "fact-checking" | "factchecking" | "fact" => Ok(PromptVariant::FactChecking),
            "nli" => Ok(PromptVariant::Nli),
            "summarization" | "sum" => Ok(PromptVariant::Summarization),
            _ => Err(UnknownVariant(s.to_string())),
        }
    }
}

/// One (query, answer, reference) record, optionally labeled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionExample {
    pub id: String,
    /// Empty for claim-only sources (NLI, fact-checking, summarization).
    #[serde(default)]
    pub query: String,
    pub answer: String,
    pub reference: String,
    #[serde(default)]
    pub label: Option<AttributionLabel>,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl AttributionExample {
    /// The claim as shown to a judge: the question followed by its answer,
    /// or the answer alone when there is no question.
    pub fn claim(&self) -> String {
        if self.query.trim().is_empty() {
            self.answer.clone()
        } else {
            format!("{} {}", self.query, self.answer)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    EmptyAnswer,
    EmptyReference,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::EmptyId => "empty id",
            Violation::EmptyAnswer => "empty answer",
            Violation::EmptyReference => "empty reference",
        })
    }
}

/// Returns every invariant the example breaks; empty means valid.
///
/// Id uniqueness is a property of a whole file and is checked by the JSONL
/// reader, not here.
pub fn validate_example(ex: &AttributionExample) -> Vec<Violation> {
    let mut out = Vec::new();
    if ex.id.is_empty() {
        out.push(Violation::EmptyId);
    }
    if ex.answer.trim().is_empty() {
        out.push(Violation::EmptyAnswer);
    }
    if ex.reference.trim().is_empty() {
        out.push(Violation::EmptyReference);
    }
    out
}

/// A judge's response to one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    /// `None` when no label could be extracted from the response.
    pub predicted: Option<AttributionLabel>,
    /// Stored verbatim.
    pub raw_response: String,
    pub prompt_variant: PromptVariant,
    pub model_id: String,
    pub shots: u32,
    /// Set when the endpoint failed for this example after all retries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
