//! Export labeled examples for instruction tuning or as plain JSONL.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{input_text, instruction_text};
use crate::types::{AttributionExample, PromptVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    InstructionTuning,
    Plain,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "instruction-tuning" => Ok(ExportFormat::InstructionTuning),
            "plain" => Ok(ExportFormat::Plain),
            other => Err(format!("unknown export format {other:?}; expected instruction-tuning or plain")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("example {id} has no label")]
pub struct Unlabeled {
    pub id: String,
}

/// Wraps a labeled example in the attribution template.
pub fn instruction_record(ex: &AttributionExample) -> Result<InstructionRecord, Unlabeled> {
    let label = ex.label.ok_or_else(|| Unlabeled { id: ex.id.clone() })?;
    let v = PromptVariant::Attribution;
    Ok(InstructionRecord {
        instruction: instruction_text(v).to_string(),
        input: input_text(v, &ex.claim(), &ex.reference),
        output: label.as_str().to_string(),
    })
}

/// Fails on the first unlabeled example.
pub fn instruction_records(examples: &[AttributionExample]) -> Result<Vec<InstructionRecord>, Unlabeled> {
    examples.iter().map(instruction_record).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::AttributionLabel;

    #[test]
    fn wraps_in_attribution_template() {
        let ex = AttributionExample {
            id: "1".into(),
            query: "Who?".into(),
            answer: "Bob.".into(),
            reference: "Bob did.".into(),
            label: Some(AttributionLabel::Contradictory),
            source: String::new(),
            meta: Default::default(),
        };
        let r = instruction_record(&ex).unwrap();
        assert!(r.instruction.starts_with("As an Attribution Validator"));
        assert_eq!(r.input, "Claim: Who? Bob.\n\nContext: Bob did.");
        assert_eq!(r.output, "Contradictory");

        let unlabeled = AttributionExample { label: None, ..ex };
        assert_eq!(instruction_records(&[unlabeled]), Err(Unlabeled { id: "1".into() }));
    }
}
