//! Manufacturing labeled examples from open-domain QA records.
//!
//! Each record is assigned one of four strategies by a seeded draw from the
//! class mix:
//!
//! * attributable: the record's own (question, answer, context) triple
//! * answer swap: the answer is replaced by a substituted candidate
//! * context swap: the answer span inside the context is replaced instead
//! * extrapolatory: the context is replaced by a BM25 hit lacking the answer
//!
//! All randomness comes from `record_rng(seed, stream, record id)`, so
//! results do not depend on concurrency or record order.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{ClientError, GenerationClient, GenerationRequest};
use crate::pool::map_bounded;
use crate::retrieval::{
    select_negative, select_positive, text_contains_answer, tokenize, tokenize_with_spans, Bm25Index,
    DEFAULT_NEGATIVE_DEPTH,
};
use crate::seed::record_rng;
use crate::types::{AttributionExample, AttributionLabel};

pub const LONGIFY_INSTRUCTION: &str = "Convert a given question and answer pair into plain sentences.";

const SUBSTITUTION_PROMPT: &str = "Please provide a related term or substitution for the given input, which should be different from the input.\n\
Input: Biden; Output: Obama\n\
Input: 1949; Output: 1358\n\
Input: University of Maryland; Output: University of Cambridge\n\
Input: 09/12/2014; Output: 03/30/2008\n\
Input: $431; Output: $769;\n\
Input: {answer}; Output: ";

pub fn longify_prompt(question: &str, answer: &str) -> String {
    format!("{LONGIFY_INSTRUCTION}\n{question}\n{answer}")
}

pub fn qa_prompt(context: &str, question: &str) -> String {
    format!("Context: {context}\nBased on Context, {question}")
}

pub fn substitution_prompt(answer: &str) -> String {
    SUBSTITUTION_PROMPT.replace("{answer}", answer)
}

pub fn random_span_prompt(context: &str) -> String {
    format!("Extract a phrase from the given passage. \n Passage: {context}")
}

/// QA input line. Without `positive_context` one is retrieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaInput {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_context: Option<String>,
    #[serde(default)]
    pub source: String,
}

/// A QA record whose context holds at least one gold answer.
#[derive(Debug, Clone, PartialEq)]
pub struct QaRecord {
    pub id: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub positive_context: String,
    pub source: String,
}

impl QaRecord {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        gold_answers: Vec<String>,
        positive_context: impl Into<String>,
        source: impl Into<String>,
    ) -> Result<Self, String> {
        let rec = QaRecord {
            id: id.into(),
            question: question.into(),
            gold_answers,
            positive_context: positive_context.into(),
            source: source.into(),
        };
        if rec.id.is_empty() {
            return Err("empty id".into());
        }
        if rec.gold_answers.iter().all(|a| tokenize(a).is_empty()) {
            return Err("no usable gold answer".into());
        }
        if !text_contains_answer(&rec.positive_context, &rec.gold_answers) {
            return Err("positive_context contains no gold answer".into());
        }
        Ok(rec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMix {
    pub attributable: f64,
    pub contradictory_answer_swap: f64,
    pub contradictory_context_swap: f64,
    pub extrapolatory: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        ClassMix {
            attributable: 0.25,
            contradictory_answer_swap: 0.25,
            contradictory_context_swap: 0.25,
            extrapolatory: 0.25,
        }
    }
}

impl ClassMix {
    pub fn weights(&self) -> [f64; 4] {
        [
            self.attributable,
            self.contradictory_answer_swap,
            self.contradictory_context_swap,
            self.extrapolatory,
        ]
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        let w = self.weights();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(SimulateError::InvalidConfig(format!("class mix has a negative or non-finite weight: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimulateError::InvalidConfig(format!("class mix sums to {sum}, not 1")));
        }
        Ok(())
    }

    /// Strategy for a uniform draw `u` in [0, 1).
    pub fn strategy_for(&self, u: f64) -> Strategy {
        let mut acc = 0.0;
        let mut last = Strategy::Attributable;
        for (s, w) in Strategy::ALL.into_iter().zip(self.weights()) {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = s;
            if u < acc {
                return s;
            }
        }
        last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Attributable,
    ContradictoryAnswerSwap,
    ContradictoryContextSwap,
    Extrapolatory,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Attributable,
        Strategy::ContradictoryAnswerSwap,
        Strategy::ContradictoryContextSwap,
        Strategy::Extrapolatory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Attributable => "attributable",
            Strategy::ContradictoryAnswerSwap => "contradictory-answer-swap",
            Strategy::ContradictoryContextSwap => "contradictory-context-swap",
            Strategy::Extrapolatory => "extrapolatory",
        }
    }

    pub fn label(self) -> AttributionLabel {
        match self {
            Strategy::Attributable => AttributionLabel::Attributable,
            Strategy::ContradictoryAnswerSwap | Strategy::ContradictoryContextSwap => AttributionLabel::Contradictory,
            Strategy::Extrapolatory => AttributionLabel::Extrapolatory,
        }
    }
}

/// Source of substituted candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substituter {
    QaModel,
    Substitution,
    RandomSpan,
}

impl Substituter {
    pub const ALL: [Substituter; 3] = [Substituter::QaModel, Substituter::Substitution, Substituter::RandomSpan];

    pub fn as_str(self) -> &'static str {
        match self {
            Substituter::QaModel => "qa-model",
            Substituter::Substitution => "substitution",
            Substituter::RandomSpan => "random-span",
        }
    }

    pub fn prompt(self, question: &str, context: &str, answer: &str) -> String {
        match self {
            Substituter::QaModel => qa_prompt(context, question),
            Substituter::Substitution => substitution_prompt(answer),
            Substituter::RandomSpan => random_span_prompt(context),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolatoryAnswer {
    #[default]
    Gold,
    QaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub class_mix: ClassMix,
    pub overlap_threshold: f64,
    pub negative_depth: usize,
    pub longify: bool,
    /// Extra attempts after the first before a record is dropped.
    pub retry_budget: u32,
    pub retry_temperature: f64,
    pub max_new_tokens: u32,
    pub extrapolatory_answer: ExtrapolatoryAnswer,
    pub concurrency: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 0,
            class_mix: ClassMix::default(),
            overlap_threshold: 0.5,
            negative_depth: DEFAULT_NEGATIVE_DEPTH,
            longify: false,
            retry_budget: 4,
            retry_temperature: 1.0,
            max_new_tokens: 64,
            extrapolatory_answer: ExtrapolatoryAnswer::Gold,
            concurrency: 4,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulateError> {
        self.class_mix.validate()?;
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(SimulateError::InvalidConfig(format!(
                "overlap_threshold must lie in [0, 1], got {}",
                self.overlap_threshold
            )));
        }
        if self.negative_depth == 0 {
            return Err(SimulateError::InvalidConfig("negative_depth must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(SimulateError::InvalidConfig("max_new_tokens must be at least 1".into()));
        }
        if !(self.retry_temperature.is_finite() && self.retry_temperature >= 0.0) {
            return Err(SimulateError::InvalidConfig("retry_temperature must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("record {id}: {source}")]
    Endpoint { id: String, source: ClientError },
    #[error("{0}")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: String,
}

/// Generation endpoints used during simulation.
#[derive(Clone, Copy, Default)]
pub struct Endpoints<'a> {
    /// Rewrites short answers as sentences.
    pub longifier: Option<&'a dyn GenerationClient>,
    /// Produces substitute answers and spans.
    pub substituter: Option<&'a dyn GenerationClient>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationOutput {
    pub examples: Vec<AttributionExample>,
    pub drops: Vec<DropRecord>,
}

impl SimulationOutput {
    /// Example count per label, in `AttributionLabel::ALL` order.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for ex in &self.examples {
            if let Some(l) = ex.label {
                c[l.index()] += 1;
            }
        }
        c
    }
}

enum Made {
    Example(Box<AttributionExample>),
    Dropped(String),
}

type Meta = BTreeMap<String, String>;

fn endpoint_err(id: &str) -> impl Fn(ClientError) -> SimulateError + '_ {
    move |source| SimulateError::Endpoint { id: id.to_string(), source }
}

/// First non-empty line, trimmed, without a trailing ';'.
pub fn clean_candidate(response: &str) -> Option<String> {
    let line = response.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = line.trim_end_matches(';').trim();
    if tokenize(line).is_empty() {
        None
    } else {
        Some(line.to_string())
    }
}

/// True when `candidate` tokenizes differently from every gold answer.
pub fn differs_from_all<S: AsRef<str>>(candidate: &str, golds: &[S]) -> bool {
    let c = tokenize(candidate);
    golds.iter().all(|g| tokenize(g.as_ref()) != c)
}

/// Returns the endpoint's sentence, or `short_answer` and `true` when the
/// response is blank.
pub fn longify_answer<C: GenerationClient + ?Sized>(
    question: &str,
    short_answer: &str,
    client: &C,
    max_new_tokens: u32,
) -> Result<(String, bool), ClientError> {
    let req = GenerationRequest::new(longify_prompt(question, short_answer), max_new_tokens);
    let text = client.complete(&req)?;
    let text = text.trim();
    if text.is_empty() {
        Ok((short_answer.to_string(), true))
    } else {
        Ok((text.to_string(), false))
    }
}

fn base_example(rec: &QaRecord, strategy: Strategy, answer: String, reference: String, mut meta: Meta) -> AttributionExample {
    meta.insert("strategy".into(), strategy.as_str().into());
    meta.insert(
        "gold_answers".into(),
        serde_json::to_string(&rec.gold_answers).expect("strings serialize"),
    );
    AttributionExample {
        id: rec.id.clone(),
        query: rec.question.clone(),
        answer,
        reference,
        label: Some(strategy.label()),
        source: rec.source.clone(),
        meta,
    }
}

fn maybe_longify(
    rec: &QaRecord,
    answer: &str,
    eps: &Endpoints,
    cfg: &SimulationConfig,
    meta: &mut Meta,
) -> Result<String, SimulateError> {
    if !cfg.longify {
        return Ok(answer.to_string());
    }
    let client = eps
        .longifier
        .ok_or_else(|| SimulateError::Missing("longify is on but no longify endpoint was given".into()))?;
    let (text, fallback) = longify_answer(&rec.question, answer, client, cfg.max_new_tokens).map_err(endpoint_err(&rec.id))?;
    if fallback {
        meta.insert("longify_fallback".into(), "true".into());
    }
    Ok(text)
}

pub fn make_attributable(rec: &QaRecord, eps: &Endpoints, cfg: &SimulationConfig) -> Result<AttributionExample, SimulateError> {
    let mut meta = Meta::new();
    let answer = maybe_longify(rec, &rec.gold_answers[0], eps, cfg, &mut meta)?;
    Ok(base_example(rec, Strategy::Attributable, answer, rec.positive_context.clone(), meta))
}

/// Asks the substituter for a candidate that differs from every gold answer.
/// `None` after 1 + `retry_budget` failed attempts.
fn substitute(
    rec: &QaRecord,
    original: &str,
    eps: &Endpoints,
    cfg: &SimulationConfig,
    stream: &str,
) -> Result<Option<(String, Substituter, u32)>, SimulateError> {
    let client = eps
        .substituter
        .ok_or_else(|| SimulateError::Missing("contradictory strategies need a substituter endpoint".into()))?;
    let mut rng = record_rng(cfg.seed, stream, &rec.id);
    let which = Substituter::ALL[rng.random_range(0..Substituter::ALL.len())];
    let prompt = which.prompt(&rec.question, &rec.positive_context, original);
    for attempt in 0..=cfg.retry_budget {
        let temperature = if attempt == 0 { 0.0 } else { cfg.retry_temperature };
        let req = GenerationRequest::new(prompt.clone(), cfg.max_new_tokens).with_temperature(temperature);
        let text = client.complete(&req).map_err(endpoint_err(&rec.id))?;
        if let Some(c) = clean_candidate(&text) {
            if differs_from_all(&c, &rec.gold_answers) && differs_from_all(&c, &[original]) {
                return Ok(Some((c, which, attempt + 1)));
            }
        }
    }
    Ok(None)
}

fn exhausted(cfg: &SimulationConfig) -> String {
    format!("no acceptable substitute after {} attempts", cfg.retry_budget + 1)
}

fn make_answer_swap(rec: &QaRecord, eps: &Endpoints, cfg: &SimulationConfig) -> Result<Made, SimulateError> {
    let Some((candidate, which, attempts)) = substitute(rec, &rec.gold_answers[0], eps, cfg, "answer-swap")? else {
        return Ok(Made::Dropped(exhausted(cfg)));
    };
    let mut meta = Meta::new();
    meta.insert("substituter".into(), which.as_str().into());
    meta.insert("candidate".into(), candidate.clone());
    meta.insert("attempts".into(), attempts.to_string());
    let answer = maybe_longify(rec, &candidate, eps, cfg, &mut meta)?;
    Ok(Made::Example(Box::new(base_example(
        rec,
        Strategy::ContradictoryAnswerSwap,
        answer,
        rec.positive_context.clone(),
        meta,
    ))))
}

pub fn make_contradictory_answer_swap(
    rec: &QaRecord,
    eps: &Endpoints,
    cfg: &SimulationConfig,
) -> Result<Option<AttributionExample>, SimulateError> {
    Ok(match make_answer_swap(rec, eps, cfg)? {
        Made::Example(ex) => Some(*ex),
        Made::Dropped(_) => None,
    })
}

/// Byte range of the first occurrence of `answer` in `context`: an exact
/// substring when there is one, else the matching token span.
pub fn find_answer_span(context: &str, answer: &str) -> Option<(usize, usize)> {
    if answer.trim().is_empty() {
        return None;
    }
    if let Some(start) = context.find(answer) {
        return Some((start, start + answer.len()));
    }
    let needle = tokenize(answer);
    if needle.is_empty() {
        return None;
    }
    let toks = tokenize_with_spans(context);
    let texts: Vec<String> = toks.iter().map(|t| t.text.clone()).collect();
    let at = crate::retrieval::find_subsequence(&texts, &needle)?;
    Some((toks[at].start, toks[at + needle.len() - 1].end))
}

fn make_context_swap(rec: &QaRecord, eps: &Endpoints, cfg: &SimulationConfig) -> Result<Made, SimulateError> {
    let found = rec
        .gold_answers
        .iter()
        .find_map(|g| find_answer_span(&rec.positive_context, g).map(|span| (g, span)));
    let Some((gold, (start, end))) = found else {
        return Ok(Made::Dropped("no gold answer span in the context".into()));
    };
    let span = &rec.positive_context[start..end];
    let Some((candidate, which, attempts)) = substitute(rec, span, eps, cfg, "context-swap")? else {
        return Ok(Made::Dropped(exhausted(cfg)));
    };
    let reference = format!(
        "{}{}{}",
        &rec.positive_context[..start],
        candidate,
        &rec.positive_context[end..]
    );
    let mut meta = Meta::new();
    meta.insert("substituter".into(), which.as_str().into());
    meta.insert("candidate".into(), candidate);
    meta.insert("replaced_span".into(), span.to_string());
    meta.insert("attempts".into(), attempts.to_string());
    let answer = maybe_longify(rec, gold, eps, cfg, &mut meta)?;
    Ok(Made::Example(Box::new(base_example(
        rec,
        Strategy::ContradictoryContextSwap,
        answer,
        reference,
        meta,
    ))))
}

pub fn make_contradictory_context_swap(
    rec: &QaRecord,
    eps: &Endpoints,
    cfg: &SimulationConfig,
) -> Result<Option<AttributionExample>, SimulateError> {
    Ok(match make_context_swap(rec, eps, cfg)? {
        Made::Example(ex) => Some(*ex),
        Made::Dropped(_) => None,
    })
}

fn make_extrapolatory_inner(
    rec: &QaRecord,
    idx: Option<&Bm25Index>,
    eps: &Endpoints,
    cfg: &SimulationConfig,
) -> Result<Made, SimulateError> {
    let idx = idx.ok_or_else(|| SimulateError::Missing("extrapolatory examples need a BM25 index".into()))?;
    let Some(neg) = select_negative(idx, &rec.question, &rec.gold_answers, cfg.negative_depth) else {
        return Ok(Made::Dropped(format!(
            "no passage without the answer in the top {}",
            cfg.negative_depth
        )));
    };
    let mut meta = Meta::new();
    meta.insert("negative_doc_id".into(), neg.doc_id.clone());
    let mut short = rec.gold_answers[0].clone();
    if cfg.extrapolatory_answer == ExtrapolatoryAnswer::QaModel {
        let client = eps
            .substituter
            .ok_or_else(|| SimulateError::Missing("extrapolatory QA-model answers need a substituter endpoint".into()))?;
        let req = GenerationRequest::new(qa_prompt(&neg.text, &rec.question), cfg.max_new_tokens);
        let text = client.complete(&req).map_err(endpoint_err(&rec.id))?;
        match clean_candidate(&text) {
            Some(c) => {
                meta.insert("answer_source".into(), "qa-model".into());
                short = c;
            }
            None => {
                meta.insert("answer_source".into(), "gold-fallback".into());
            }
        }
    }
    let answer = maybe_longify(rec, &short, eps, cfg, &mut meta)?;
    Ok(Made::Example(Box::new(base_example(
        rec,
        Strategy::Extrapolatory,
        answer,
        neg.text.clone(),
        meta,
    ))))
}

pub fn make_extrapolatory(
    rec: &QaRecord,
    idx: &Bm25Index,
    eps: &Endpoints,
    cfg: &SimulationConfig,
) -> Result<Option<AttributionExample>, SimulateError> {
    Ok(match make_extrapolatory_inner(rec, Some(idx), eps, cfg)? {
        Made::Example(ex) => Some(*ex),
        Made::Dropped(_) => None,
    })
}

/// Seeded strategy for one record.
pub fn assign_strategy(cfg: &SimulationConfig, id: &str) -> Strategy {
    let u: f64 = record_rng(cfg.seed, "strategy", id).random();
    cfg.class_mix.strategy_for(u)
}

/// Turns QA input lines into records, retrieving a positive context when
/// none is given. Unusable lines become drops.
pub fn prepare_records(
    inputs: &[QaInput],
    idx: Option<&Bm25Index>,
    cfg: &SimulationConfig,
) -> (Vec<QaRecord>, Vec<DropRecord>) {
    let mut records = Vec::new();
    let mut drops = Vec::new();
    for q in inputs {
        let drop = |reason: String| DropRecord { id: q.id.clone(), reason };
        let context = match (&q.positive_context, idx) {
            (Some(c), _) => c.clone(),
            (None, Some(idx)) => match select_positive(idx, &q.question, &q.answers, cfg.overlap_threshold) {
                Some(hit) => hit.text,
                None => {
                    drops.push(drop("no positive passage above the overlap threshold".into()));
                    continue;
                }
            },
            (None, None) => {
                drops.push(drop("no positive_context and no index to retrieve one".into()));
                continue;
            }
        };
        match QaRecord::new(&q.id, &q.question, q.answers.clone(), context, &q.source) {
            Ok(r) => records.push(r),
            Err(e) => drops.push(drop(format!("invalid record: {e}"))),
        }
    }
    (records, drops)
}

/// Output order follows input order. The first endpoint failure (in input
/// order) aborts the run.
pub fn simulate_dataset(
    records: &[QaRecord],
    cfg: &SimulationConfig,
    eps: &Endpoints,
    idx: Option<&Bm25Index>,
) -> Result<SimulationOutput, SimulateError> {
    cfg.validate()?;
    let made = map_bounded(records, cfg.concurrency, |rec| match assign_strategy(cfg, &rec.id) {
        Strategy::Attributable => make_attributable(rec, eps, cfg).map(|e| Made::Example(Box::new(e))),
        Strategy::ContradictoryAnswerSwap => make_answer_swap(rec, eps, cfg),
        Strategy::ContradictoryContextSwap => make_context_swap(rec, eps, cfg),
        Strategy::Extrapolatory => make_extrapolatory_inner(rec, idx, eps, cfg),
    });
    let mut out = SimulationOutput::default();
    for (rec, m) in records.iter().zip(made) {
        match m? {
            Made::Example(ex) => out.examples.push(*ex),
            Made::Dropped(reason) => out.drops.push(DropRecord {
                id: rec.id.clone(),
                reason,
            }),
        }
    }
    Ok(out)
}
