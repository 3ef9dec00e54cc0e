//! Label extraction from free-text responses.
//!
//! Rule 1: a vocabulary term at the very start (after whitespace and
//! punctuation) wins. Rule 2: otherwise the earliest term anywhere wins.
//! Matching is case-insensitive and anchored only at the start of a word,
//! so "supports" matches "support". Negation is not understood.

use std::sync::OnceLock;

use regex::Regex;

use crate::types::{AttributionLabel, PromptVariant};

use AttributionLabel::{Attributable as A, Contradictory as C, Extrapolatory as E};

/// (pattern, label) pairs per variant.
pub fn vocabulary(variant: PromptVariant) -> &'static [(&'static str, AttributionLabel)] {
    match variant {
        PromptVariant::Attribution => &[("attributable", A), ("contradictory", C), ("extrapolatory", E)],
        PromptVariant::FactChecking => &[
            ("supported", A),
            ("refuted", C),
            (r"not\s+enough\s+information", E),
        ],
        PromptVariant::Nli => &[("entailment", A), ("contradiction", C), ("neutral", E)],
        PromptVariant::Summarization => &[
            ("supports?", A),
            ("contradicts?", C),
            (r"not\s+enough\s+information", E),
        ],
    }
}

struct Compiled {
    leading: Regex,
    anywhere: Regex,
}

fn compile(variant: PromptVariant) -> Compiled {
    let alts: Vec<String> = vocabulary(variant).iter().map(|(p, _)| format!("({p})")).collect();
    let alts = alts.join("|");
    Compiled {
        leading: Regex::new(&format!(r"(?i)^[\s\p{{P}}]*(?:{alts})")).expect("valid pattern"),
        anywhere: Regex::new(&format!(r"(?i)\b(?:{alts})")).expect("valid pattern"),
    }
}

fn compiled(variant: PromptVariant) -> &'static Compiled {
    static CELLS: [OnceLock<Compiled>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = PromptVariant::ALL.iter().position(|v| *v == variant).expect("known variant");
    CELLS[slot].get_or_init(|| compile(variant))
}

fn label_of(re: &Regex, variant: PromptVariant, text: &str) -> Option<AttributionLabel> {
    let caps = re.captures(text)?;
    let vocab = vocabulary(variant);
    (0..vocab.len()).find(|&i| caps.get(i + 1).is_some()).map(|i| vocab[i].1)
}

pub fn extract_label(response: &str, variant: PromptVariant) -> Option<AttributionLabel> {
    let c = compiled(variant);
    label_of(&c.leading, variant, response).or_else(|| label_of(&c.anywhere, variant, response))
}
