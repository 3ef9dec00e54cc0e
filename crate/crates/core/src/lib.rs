//! Tooling for evaluating whether a cited reference supports a generated
//! answer.
//!
//! The crate covers both halves of the workflow:
//!
//! * building labeled examples, either by simulating errors from open-domain
//!   QA records ([`simulate`]) or by relabeling fact-checking, NLI and
//!   summarization data ([`repurpose`]);
//! * judging (query, answer, reference) triples with a prompted language
//!   model ([`evaluator`], [`client`]) and scoring the results ([`metrics`]).
//!
//! Every label lives in the three-way space of [`AttributionLabel`].

pub mod client;
pub mod evaluator;
pub mod export;
pub mod jsonl;
pub mod metrics;
pub mod pool;
pub mod repurpose;
pub mod retrieval;
pub mod sample;
pub mod seed;
pub mod simulate;
pub mod types;

pub use types::{
    parse_label, validate_example, AttributionExample, AttributionLabel, Prediction,
    PromptVariant, UnknownLabel, Violation,
};
