//! Flat TOML run configuration. Every key is optional; command-line flags
//! override file values, and built-in defaults fill the rest.
//!
//! ```toml
//! seed = 7
//! variant = "attribution"
//! shots = 3
//! base_url = "https://api.openai.com/v1"
//! model_id = "gpt-4"
//! credential_env = "OPENAI_API_KEY"
//! requests_per_minute = 60
//! mix_attributable = 0.25
//! substituter_model_id = "flan-t5-xl"
//! ```
//!
//! Credentials are never read from this file, only the name of the
//! environment variable that holds one.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attrib_core::client::{EndpointConfig, RetryPolicy};
use attrib_core::evaluator::EvalConfig;
use attrib_core::simulate::{ClassMix, ExtrapolatoryAnswer, SimulationConfig};
use attrib_core::PromptVariant;
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub lenient: Option<bool>,

    pub variant: Option<String>,
    pub shots: Option<usize>,
    pub demos: Option<PathBuf>,
    pub budget_tokens: Option<usize>,
    pub max_new_tokens: Option<u32>,
    pub temperature: Option<f64>,

    pub base_url: Option<String>,
    pub model_id: Option<String>,
    pub credential_env: Option<String>,
    pub max_concurrency: Option<usize>,
    pub requests_per_minute: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_attempts: Option<u32>,
    pub initial_backoff_ms: Option<u64>,
    pub max_backoff_ms: Option<u64>,

    pub substituter_model_id: Option<String>,
    pub longifier_model_id: Option<String>,

    pub mix_attributable: Option<f64>,
    pub mix_answer_swap: Option<f64>,
    pub mix_context_swap: Option<f64>,
    pub mix_extrapolatory: Option<f64>,
    pub overlap_threshold: Option<f64>,
    pub negative_depth: Option<usize>,
    pub longify: Option<bool>,
    pub retry_budget: Option<u32>,
    pub retry_temperature: Option<f64>,
    pub extrapolatory_answer: Option<String>,
    pub concurrency: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn endpoint(&self, model_override: Option<&str>) -> EndpointConfig {
        let d = EndpointConfig::default();
        let r = RetryPolicy::default();
        EndpointConfig {
            base_url: self.base_url.clone().unwrap_or(d.base_url),
            model_id: model_override
                .map(String::from)
                .or_else(|| self.model_id.clone())
                .unwrap_or(d.model_id),
            credential_env: self.credential_env.clone().or(d.credential_env),
            max_concurrency: self.max_concurrency.unwrap_or(d.max_concurrency),
            requests_per_minute: self.requests_per_minute.unwrap_or(d.requests_per_minute),
            retry: RetryPolicy {
                max_attempts: self.max_attempts.unwrap_or(r.max_attempts),
                initial_backoff_ms: self.initial_backoff_ms.unwrap_or(r.initial_backoff_ms),
                max_backoff_ms: self.max_backoff_ms.unwrap_or(r.max_backoff_ms),
                multiplier: r.multiplier,
            },
            timeout_secs: self.timeout_secs.unwrap_or(d.timeout_secs),
        }
    }

    pub fn variant(&self, flag: Option<PromptVariant>) -> Result<PromptVariant> {
        match (flag, &self.variant) {
            (Some(v), _) => Ok(v),
            (None, Some(s)) => s.parse().map_err(|e| anyhow::anyhow!("config: {e}")),
            (None, None) => Ok(PromptVariant::Attribution),
        }
    }

    pub fn eval(&self, budget: Option<usize>) -> EvalConfig {
        let d = EvalConfig::default();
        EvalConfig {
            budget_tokens: budget.or(self.budget_tokens).unwrap_or(d.budget_tokens),
            max_new_tokens: self.max_new_tokens.unwrap_or(d.max_new_tokens),
            temperature: self.temperature.unwrap_or(d.temperature),
        }
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let d = SimulationConfig::default();
        let m = d.class_mix;
        let extrapolatory_answer = match self.extrapolatory_answer.as_deref() {
            None => d.extrapolatory_answer,
            Some("gold") => ExtrapolatoryAnswer::Gold,
            Some("qa-model") => ExtrapolatoryAnswer::QaModel,
            Some(other) => bail!("config: extrapolatory_answer must be gold or qa-model, got {other:?}"),
        };
        Ok(SimulationConfig {
            seed: self.seed.unwrap_or(d.seed),
            class_mix: ClassMix {
                attributable: self.mix_attributable.unwrap_or(m.attributable),
                contradictory_answer_swap: self.mix_answer_swap.unwrap_or(m.contradictory_answer_swap),
                contradictory_context_swap: self.mix_context_swap.unwrap_or(m.contradictory_context_swap),
                extrapolatory: self.mix_extrapolatory.unwrap_or(m.extrapolatory),
            },
            overlap_threshold: self.overlap_threshold.unwrap_or(d.overlap_threshold),
            negative_depth: self.negative_depth.unwrap_or(d.negative_depth),
            longify: self.longify.unwrap_or(d.longify),
            retry_budget: self.retry_budget.unwrap_or(d.retry_budget),
            retry_temperature: self.retry_temperature.unwrap_or(d.retry_temperature),
            max_new_tokens: self.max_new_tokens.unwrap_or(d.max_new_tokens),
            extrapolatory_answer,
            concurrency: self.concurrency.unwrap_or(d.concurrency),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("seed = 9\nmix_attributable = 1.0\nmix_answer_swap = 0.0\nmix_context_swap = 0.0\nmix_extrapolatory = 0.0\nmodel_id = \"m\"").unwrap();
        let s = c.simulation().unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.negative_depth, 100);
        s.validate().unwrap();
        let e = c.endpoint(None);
        assert_eq!(e.model_id, "m");
        assert_eq!(c.endpoint(Some("sub")).model_id, "sub");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("api_key = \"x\"").is_err());
    }
}
