//! Judging examples with a generation endpoint: prompt, call, parse.

mod extract;
mod prompt;

pub use extract::{extract_label, vocabulary};
pub use prompt::{
    build_prompt, count_tokens, input_text, instruction_text, response_word, template, Demonstration, FewShotSet, PromptError,
    DEFAULT_BUDGET_TOKENS, DEMO_INTRO, DEMO_SEPARATOR, LIVE_INTRO,
};

use serde::{Deserialize, Serialize};

use crate::client::{complete_batch, GenerationClient, GenerationRequest, MockClient};
use crate::types::{AttributionExample, Prediction, PromptVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub budget_tokens: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            budget_tokens: DEFAULT_BUDGET_TOKENS,
            max_new_tokens: 128,
            temperature: 0.0,
        }
    }
}

/// One prediction per example, in input order. Prompt and endpoint failures
/// are recorded on the prediction instead of failing the batch.
pub fn evaluate_batch<C: GenerationClient + ?Sized>(
    examples: &[AttributionExample],
    variant: PromptVariant,
    shots: Option<&FewShotSet>,
    client: &C,
    cfg: &EvalConfig,
) -> Vec<Prediction> {
    let shot_count = shots.map_or(0, |s| s.len()) as u32;
    let prompts: Vec<Result<String, PromptError>> = examples
        .iter()
        .map(|ex| build_prompt(ex, variant, shots, cfg.budget_tokens))
        .collect();

    let reqs: Vec<GenerationRequest> = prompts
        .iter()
        .filter_map(|p| p.as_ref().ok())
        .map(|p| GenerationRequest::new(p.clone(), cfg.max_new_tokens).with_temperature(cfg.temperature))
        .collect();
    let mut responses = complete_batch(client, &reqs).into_iter();

    examples
        .iter()
        .zip(prompts)
        .map(|(ex, prompt)| {
            let mut pred = Prediction {
                example_id: ex.id.clone(),
                predicted: None,
                raw_response: String::new(),
                prompt_variant: variant,
                model_id: client.model_id().to_string(),
                shots: shot_count,
                error: None,
            };
            match prompt {
                Err(e) => pred.error = Some(format!("prompt: {e}")),
                Ok(_) => match responses.next().expect("one response per prompt") {
                    Ok(text) => {
                        pred.predicted = extract_label(&text, variant);
                        pred.raw_response = text;
                    }
                    Err(e) => pred.error = Some(e.to_string()),
                },
            }
            pred
        })
        .collect()
}

/// A mock that answers every labeled example's prompt with its gold label
/// word in `variant`'s vocabulary. Unlabeled examples are skipped.
pub fn oracle_client(
    examples: &[AttributionExample],
    variant: PromptVariant,
    shots: Option<&FewShotSet>,
    cfg: &EvalConfig,
) -> Result<MockClient, PromptError> {
    let mut client = MockClient::new("oracle");
    for ex in examples {
        if let Some(label) = ex.label {
            let prompt = build_prompt(ex, variant, shots, cfg.budget_tokens)?;
            client = client.with_response(&prompt, format!("{}.", response_word(variant, label)));
        }
    }
    Ok(client)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{ClientError, FnClient};
    use crate::types::AttributionLabel;

    fn ex(id: &str, label: AttributionLabel) -> AttributionExample {
        AttributionExample {
            id: id.into(),
            query: String::new(),
            answer: format!("answer {id}"),
            reference: format!("reference {id} {}", label.as_str()),
            label: Some(label),
            source: String::new(),
            meta: Default::default(),
        }
    }

    #[test]
    fn oracle_mock_reproduces_gold() {
        let exs: Vec<_> = AttributionLabel::ALL
            .iter()
            .enumerate()
            .map(|(i, l)| ex(&i.to_string(), *l))
            .collect();
        let oracle = FnClient::new("oracle", |r: &GenerationRequest| {
            let word = ["Attributable", "Contradictory", "Extrapolatory"]
                .into_iter()
                .find(|w| r.prompt.ends_with(&format!(" {w}\n\n### Response:")))
                .unwrap_or("none");
            Ok(format!("{word}. Because."))
        });
        let preds = evaluate_batch(&exs, PromptVariant::Attribution, None, &oracle, &EvalConfig::default());
        assert_eq!(preds.len(), 3);
        for (p, e) in preds.iter().zip(&exs) {
            assert_eq!(p.example_id, e.id);
            assert_eq!(p.predicted, e.label);
            assert_eq!(p.model_id, "oracle");
            assert_eq!(p.shots, 0);
        }
    }

    #[test]
    fn failures_are_isolated() {
        let exs = vec![ex("ok", AttributionLabel::Attributable), ex("bad", AttributionLabel::Contradictory)];
        let client = FnClient::new("m", |r: &GenerationRequest| {
            if r.prompt.contains("answer bad") {
                Err(ClientError::Http { status: 400, body: "no".into() })
            } else {
                Ok("Hmm, maybe extrapolatory?".into())
            }
        });
        let preds = evaluate_batch(&exs, PromptVariant::Attribution, None, &client, &EvalConfig::default());
        assert_eq!(preds[0].predicted, Some(AttributionLabel::Extrapolatory));
        assert_eq!(preds[0].raw_response, "Hmm, maybe extrapolatory?");
        assert_eq!(preds[1].predicted, None);
        assert!(preds[1].error.as_deref().unwrap().contains("400"));
    }

    #[test]
    fn prompt_errors_skip_the_call() {
        let exs = vec![ex("a", AttributionLabel::Attributable)];
        let client = FnClient::new("m", |_: &GenerationRequest| Ok("Attributable".to_string()));
        let cfg = EvalConfig { budget_tokens: 3, ..EvalConfig::default() };
        let preds = evaluate_batch(&exs, PromptVariant::Attribution, None, &client, &cfg);
        assert!(preds[0].error.as_deref().unwrap().starts_with("prompt:"));
        assert_eq!(client.calls(), 0);
    }

    #[test]
    fn empty_batch() {
        let client = FnClient::new("m", |_: &GenerationRequest| Ok(String::new()));
        let shots = FewShotSet::builtin();
        assert!(evaluate_batch(&[], PromptVariant::Nli, Some(&shots), &client, &EvalConfig::default()).is_empty());
    }
}
