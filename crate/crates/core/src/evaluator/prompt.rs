//! Prompt templates, few-shot demonstrations and budgeted assembly.
//!
//! Templates are plain text with two placeholders, `{claim}` and
//! `{context}`. Everything before the `### Input:` line is the instruction
//! header; demonstrations go between the header and the live input.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AttributionExample, AttributionLabel, PromptVariant};

pub const DEFAULT_BUDGET_TOKENS: usize = 2048;

pub const DEMO_INTRO: &str = "Here are some demonstration examples for you.";
pub const DEMO_SEPARATOR: &str = "\n\n-\n\n";
pub const LIVE_INTRO: &str = "Now here is the example that needs your response:";

const INPUT_MARKER: &str = "### Input:";

const ATTRIBUTION: &str = include_str!("../../resources/templates/attribution.txt");
const FACT_CHECKING: &str = include_str!("../../resources/templates/fact-checking.txt");
const NLI: &str = include_str!("../../resources/templates/nli.txt");
const SUMMARIZATION: &str = include_str!("../../resources/templates/summarization.txt");
const DEMOS: &str = include_str!("../../resources/demos.jsonl");

pub fn template(variant: PromptVariant) -> &'static str {
    match variant {
        PromptVariant::Attribution => ATTRIBUTION,
        PromptVariant::FactChecking => FACT_CHECKING,
        PromptVariant::Nli => NLI,
        PromptVariant::Summarization => SUMMARIZATION,
    }
}

/// The word a demonstration response opens with for `label`.
pub fn response_word(variant: PromptVariant, label: AttributionLabel) -> &'static str {
    use AttributionLabel::*;
    match (variant, label) {
        (PromptVariant::Attribution, l) => l.as_str(),
        (PromptVariant::FactChecking, Attributable) => "Supported",
        (PromptVariant::FactChecking, Contradictory) => "Refuted",
        (PromptVariant::Nli, Attributable) => "Entailment",
        (PromptVariant::Nli, Contradictory) => "Contradiction",
        (PromptVariant::Nli, Extrapolatory) => "Neutral",
        (PromptVariant::Summarization, Attributable) => "Support",
        (PromptVariant::Summarization, Contradictory) => "Contradicts",
        (PromptVariant::FactChecking | PromptVariant::Summarization, Extrapolatory) => "Not Enough Information",
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("budget of {budget} tokens cannot hold the instruction and claim ({needed} tokens)")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error("demonstration {id}: {problem}")]
    BadDemo { id: String, problem: String },
    #[error("demonstrations: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: String,
    #[serde(default)]
    pub query: String,
    pub answer: String,
    pub reference: String,
    pub label: AttributionLabel,
    #[serde(default)]
    pub explanation: String,
}

impl Demonstration {
    fn claim(&self) -> String {
        if self.query.is_empty() {
            self.answer.clone()
        } else {
            format!("{} {}", self.query, self.answer)
        }
    }

    /// Gold response text in the vocabulary of `variant`.
    pub fn response(&self, variant: PromptVariant) -> String {
        let word = response_word(variant, self.label);
        if self.explanation.is_empty() {
            format!("{word}.")
        } else {
            format!("{word}. {}", self.explanation)
        }
    }
}

/// Demonstrations prepended to the live input, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotSet {
    pub demos: Vec<Demonstration>,
}

impl FewShotSet {
    /// The three shipped demonstrations.
    pub fn builtin() -> Self {
        Self::parse(DEMOS).expect("shipped demonstrations parse")
    }

    pub fn parse(jsonl: &str) -> Result<Self, PromptError> {
        let mut demos = Vec::new();
        for (i, line) in jsonl.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let demo: Demonstration = serde_json::from_str(line).map_err(|e| PromptError::BadDemo {
                id: format!("line {}", i + 1),
                problem: e.to_string(),
            })?;
            if demo.answer.trim().is_empty() || demo.reference.trim().is_empty() {
                return Err(PromptError::BadDemo {
                    id: demo.id,
                    problem: "answer and reference must be non-empty".into(),
                });
            }
            demos.push(demo);
        }
        Ok(FewShotSet { demos })
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }
}

/// Substitutes both placeholders in one pass, so placeholder-like text
/// inside `claim` is never expanded again.
fn fill(template: &str, claim: &str, context: &str) -> String {
    let mut out = String::with_capacity(template.len() + claim.len() + context.len());
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(t) = tail.strip_prefix("{claim}") {
            out.push_str(claim);
            rest = t;
        } else if let Some(t) = tail.strip_prefix("{context}") {
            out.push_str(context);
            rest = t;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

fn split_template(variant: PromptVariant) -> (&'static str, &'static str) {
    let t = template(variant);
    let at = t.find(INPUT_MARKER).expect("template has an input section");
    (t[..at].trim_end(), &t[at..])
}

/// Instruction paragraph(s) of `variant`, without the section marker.
pub fn instruction_text(variant: PromptVariant) -> &'static str {
    let (header, _) = split_template(variant);
    header.trim_start_matches("### Instruction:").trim()
}

/// The filled input section, without its marker and the response cue.
pub fn input_text(variant: PromptVariant, claim: &str, context: &str) -> String {
    let (_, input) = split_template(variant);
    let filled = fill(input, claim, context);
    let body = filled.strip_prefix(INPUT_MARKER).unwrap_or(&filled);
    body.trim_end().trim_end_matches("### Response:").trim().to_string()
}

fn assemble(variant: PromptVariant, claim: &str, context: &str, demos: &[Demonstration]) -> String {
    let (header, input) = split_template(variant);
    let live = fill(input, claim, context);
    if demos.is_empty() {
        return format!("{header}\n\n{live}");
    }
    let blocks: Vec<String> = demos
        .iter()
        .map(|d| format!("{}\n{}", fill(input, &d.claim(), &d.reference), d.response(variant)))
        .collect();
    format!(
        "{header}\n\n{DEMO_INTRO}\n\n{}{DEMO_SEPARATOR}{LIVE_INTRO}\n\n{live}",
        blocks.join(DEMO_SEPARATOR)
    )
}

pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Longest prefix of `text` holding at most `n` whitespace tokens.
fn first_tokens(text: &str, n: usize) -> &str {
    if n == 0 {
        return "";
    }
    let mut seen = 0;
    let mut in_token = false;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if in_token {
                in_token = false;
                if seen == n {
                    return &text[..i];
                }
            }
        } else if !in_token {
            in_token = true;
            seen += 1;
        }
    }
    text
}

/// Renders `ex` for `variant`. When the whitespace-token count exceeds
/// `budget_tokens` the reference is cut from the tail; if even an empty
/// reference does not fit, demonstrations are dropped from the end.
pub fn build_prompt(
    ex: &AttributionExample,
    variant: PromptVariant,
    shots: Option<&FewShotSet>,
    budget_tokens: usize,
) -> Result<String, PromptError> {
    let claim = ex.claim();
    let all_demos: &[Demonstration] = shots.map(|s| s.demos.as_slice()).unwrap_or(&[]);
    let ref_tokens = count_tokens(&ex.reference);

    for keep in (0..=all_demos.len()).rev() {
        let demos = &all_demos[..keep];
        let fixed = count_tokens(&assemble(variant, &claim, "", demos));
        if fixed > budget_tokens {
            continue;
        }
        let room = budget_tokens - fixed;
        if room == 0 && ref_tokens > 0 && keep > 0 {
            continue;
        }
        let reference = first_tokens(&ex.reference, room);
        return Ok(assemble(variant, &claim, reference, demos));
    }
    Err(PromptError::BudgetTooSmall {
        budget: budget_tokens,
        needed: count_tokens(&assemble(variant, &claim, "", &[])),
    })
}
