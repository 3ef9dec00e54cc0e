//! Adapters that relabel fact-checking, NLI and summarization records into
//! attribution examples.
//!
//! Claims, hypotheses and summaries become the answer; evidence, premises and
//! source articles become the reference. The query is always empty.

mod input;
mod mapping;
mod merge;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::record_rng;
use crate::types::{validate_example, AttributionExample, AttributionLabel};

pub use input::{parse_source_line, read_source_records};
pub use mapping::{MappingTable, Target};
pub use merge::{merge_by_id, MergeOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    Fever,
    AdversarialFever,
    Feverous,
    VitaminC,
    MultiFc,
    PubHealth,
    SciFact,
    Snli,
    MultiNli,
    Anli,
    SciTail,
    XsumHalluc,
    Xent,
    FactCc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    FactChecking,
    Nli,
    Summarization,
}

impl Dataset {
    pub const ALL: [Dataset; 14] = [
        Dataset::Fever,
        Dataset::AdversarialFever,
        Dataset::Feverous,
        Dataset::VitaminC,
        Dataset::MultiFc,
        Dataset::PubHealth,
        Dataset::SciFact,
        Dataset::Snli,
        Dataset::MultiNli,
        Dataset::Anli,
        Dataset::SciTail,
        Dataset::XsumHalluc,
        Dataset::Xent,
        Dataset::FactCc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Fever => "fever",
            Dataset::AdversarialFever => "adversarial-fever",
            Dataset::Feverous => "feverous",
            Dataset::VitaminC => "vitaminc",
            Dataset::MultiFc => "multifc",
            Dataset::PubHealth => "pubhealth",
            Dataset::SciFact => "scifact",
            Dataset::Snli => "snli",
            Dataset::MultiNli => "multinli",
            Dataset::Anli => "anli",
            Dataset::SciTail => "scitail",
            Dataset::XsumHalluc => "xsum-halluc",
            Dataset::Xent => "xent",
            Dataset::FactCc => "factcc",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Dataset::Fever
            | Dataset::AdversarialFever
            | Dataset::Feverous
            | Dataset::VitaminC
            | Dataset::MultiFc
            | Dataset::PubHealth
            | Dataset::SciFact => Family::FactChecking,
            Dataset::Snli | Dataset::MultiNli | Dataset::Anli | Dataset::SciTail => Family::Nli,
            Dataset::XsumHalluc | Dataset::Xent | Dataset::FactCc => Family::Summarization,
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .trim()
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        Dataset::ALL
            .into_iter()
            .find(|d| d.name().replace('-', "") == folded)
            .or(match folded.as_str() {
                "mnli" => Some(Dataset::MultiNli),
                "xsum" | "xsumhallucination" | "xsumhallucinations" => Some(Dataset::XsumHalluc),
                "advfever" => Some(Dataset::AdversarialFever),
                _ => None,
            })
            .ok_or_else(|| {
                let names: Vec<_> = Dataset::ALL.iter().map(|d| d.name()).collect();
                format!("unknown dataset {s:?}; expected one of: {}", names.join(", "))
            })
    }
}

/// Evidence as supplied: one text, or several pieces (FEVEROUS).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evidence {
    Text(String),
    Pieces(Vec<String>),
}

impl Evidence {
    fn is_empty(&self) -> bool {
        match self {
            Evidence::Text(t) => t.trim().is_empty(),
            Evidence::Pieces(p) => p.iter().all(|s| s.trim().is_empty()),
        }
    }
}

/// One record of a source dataset, already split into claim and evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    pub id: String,
    pub dataset: Dataset,
    /// Claim, hypothesis, or summary.
    pub claim: String,
    /// Evidence, premise, or source article.
    pub evidence: Evidence,
    pub original_label: String,
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepurposeError {
    #[error("record {id:?}: unknown {dataset} label {label:?}")]
    UnknownLabel {
        id: String,
        dataset: Dataset,
        label: String,
    },
    #[error("record {id:?}: {dataset} is not a {expected} dataset")]
    WrongFamily {
        id: String,
        dataset: Dataset,
        expected: &'static str,
    },
    #[error("cannot concatenate an empty evidence list")]
    EmptyEvidenceList,
    #[error("record {id:?}: {problem}")]
    InvalidRecord { id: String, problem: String },
    #[error("mapping file: {0}")]
    MappingFile(String),
    #[error("line {line}: {message}")]
    Input { line: usize, message: String },
}

/// Result of running one record through an adapter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Converted(AttributionExample),
    Dropped { id: String, reason: String },
}

/// Joins evidence pieces as `"1. <p1> 2. <p2> ..."`.
pub fn concat_evidence<S: AsRef<str>>(pieces: &[S]) -> Result<String, RepurposeError> {
    if pieces.is_empty() {
        return Err(RepurposeError::EmptyEvidenceList);
    }
    Ok(pieces
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{}. {}", i + 1, p.as_ref()))
        .collect::<Vec<_>>()
        .join(" "))
}

/// Splits text after `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev_terminal = false;
    for (i, c) in text.char_indices() {
        if prev_terminal && c.is_whitespace() {
            let s = text[start..i].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i;
        }
        prev_terminal = matches!(c, '.' | '!' | '?');
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Shared state for one adapter run: label table, seed, and the pool of
/// SciFact abstracts used to build extrapolatory evidence.
#[derive(Debug, Clone)]
pub struct RepurposeContext {
    pub table: MappingTable,
    pub seed: u64,
    abstracts: Vec<(String, String)>,
}

impl RepurposeContext {
    pub fn new(table: MappingTable, seed: u64) -> Self {
        RepurposeContext {
            table,
            seed,
            abstracts: Vec::new(),
        }
    }

    /// Collects SciFact abstracts keyed by article (`extra["article_id"]`,
    /// falling back to the record id), first occurrence wins.
    pub fn with_abstract_pool(mut self, records: &[SourceRecord]) -> Self {
        for r in records.iter().filter(|r| r.dataset == Dataset::SciFact) {
            let article = article_id(r).to_string();
            let text = evidence_text(r.dataset, &r.evidence).unwrap_or_default();
            if text.trim().is_empty() || self.abstracts.iter().any(|(a, _)| *a == article) {
                continue;
            }
            self.abstracts.push((article, text));
        }
        self
    }

    fn provenance(&self, rec: &SourceRecord) -> BTreeMap<String, String> {
        let mut meta = BTreeMap::new();
        meta.insert("dataset".into(), rec.dataset.name().into());
        meta.insert("original_label".into(), rec.original_label.clone());
        meta.insert(
            "mapping".into(),
            match self.table.override_digest() {
                Some(d) => format!("override:{d}"),
                None => "default".into(),
            },
        );
        for (k, v) in &rec.extra {
            meta.entry(format!("source_{k}")).or_insert_with(|| v.clone());
        }
        meta
    }

    fn lookup(&self, rec: &SourceRecord) -> Result<Target, RepurposeError> {
        self.table
            .lookup(rec.dataset, &rec.original_label)
            .ok_or_else(|| RepurposeError::UnknownLabel {
                id: rec.id.clone(),
                dataset: rec.dataset,
                label: rec.original_label.clone(),
            })
    }

    fn build(
        &self,
        rec: &SourceRecord,
        reference: String,
        label: AttributionLabel,
        mut meta: BTreeMap<String, String>,
    ) -> Result<Outcome, RepurposeError> {
        meta.extend(self.provenance(rec));
        let ex = AttributionExample {
            id: rec.id.clone(),
            query: String::new(),
            answer: rec.claim.clone(),
            reference,
            label: Some(label),
            source: rec.dataset.name().into(),
            meta,
        };
        let violations = validate_example(&ex);
        if !violations.is_empty() {
            return Err(RepurposeError::InvalidRecord {
                id: rec.id.clone(),
                problem: violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
            });
        }
        Ok(Outcome::Converted(ex))
    }

    fn random_other_sentence(&self, rec: &SourceRecord) -> Option<(String, String)> {
        let own = article_id(rec);
        let candidates: Vec<&(String, String)> =
            self.abstracts.iter().filter(|(a, _)| a != own).collect();
        if candidates.is_empty() {
            return None;
        }
        let mut rng = record_rng(self.seed, "scifact-nei", &rec.id);
        let (article, text) = candidates[rng.random_range(0..candidates.len())];
        let sentences = split_sentences(text);
        let sentence = sentences[rng.random_range(0..sentences.len())];
        Some((article.clone(), sentence.to_string()))
    }
}

fn article_id(rec: &SourceRecord) -> &str {
    rec.extra.get("article_id").map(String::as_str).unwrap_or(&rec.id)
}

fn evidence_text(dataset: Dataset, evidence: &Evidence) -> Result<String, RepurposeError> {
    match evidence {
        Evidence::Text(t) => Ok(t.clone()),
        Evidence::Pieces(p) if dataset == Dataset::Feverous => concat_evidence(p),
        Evidence::Pieces(p) => Ok(p.join(" ")),
    }
}

fn dropped(rec: &SourceRecord, why: &str) -> Outcome {
    Outcome::Dropped {
        id: rec.id.clone(),
        reason: format!("{}: label {:?} {why}", rec.dataset, rec.original_label),
    }
}

fn check_family(rec: &SourceRecord, family: Family, expected: &'static str) -> Result<(), RepurposeError> {
    if rec.dataset.family() == family {
        Ok(())
    } else {
        Err(RepurposeError::WrongFamily {
            id: rec.id.clone(),
            dataset: rec.dataset,
            expected,
        })
    }
}

/// Fact-checking record → example. Claim becomes the answer, evidence the
/// reference. SciFact claims without evidence are paired with one random
/// sentence from a different article's abstract.
pub fn map_fact_checking(rec: &SourceRecord, ctx: &RepurposeContext) -> Result<Outcome, RepurposeError> {
    check_family(rec, Family::FactChecking, "fact-checking")?;
    let label = match ctx.lookup(rec)? {
        Target::Drop => return Ok(dropped(rec, "is not retained")),
        Target::Label(l) => l,
    };
    if rec.dataset == Dataset::SciFact && label == AttributionLabel::Extrapolatory {
        let Some((article, sentence)) = ctx.random_other_sentence(rec) else {
            return Ok(Outcome::Dropped {
                id: rec.id.clone(),
                reason: "scifact: no other article available for extrapolatory evidence".into(),
            });
        };
        let mut meta = BTreeMap::new();
        meta.insert("evidence_strategy".into(), "random_sentence_other_article".into());
        meta.insert("evidence_article_id".into(), article);
        meta.insert("seed".into(), ctx.seed.to_string());
        return ctx.build(rec, sentence, label, meta);
    }
    if rec.evidence.is_empty() {
        return Err(RepurposeError::InvalidRecord {
            id: rec.id.clone(),
            problem: "empty evidence".into(),
        });
    }
    let reference = evidence_text(rec.dataset, &rec.evidence)?;
    ctx.build(rec, reference, label, BTreeMap::new())
}

/// NLI record → example: hypothesis is the answer, premise the reference.
pub fn map_nli(rec: &SourceRecord, ctx: &RepurposeContext) -> Result<Outcome, RepurposeError> {
    check_family(rec, Family::Nli, "NLI")?;
    match ctx.lookup(rec)? {
        Target::Drop => Ok(dropped(rec, "has no gold label")),
        Target::Label(l) => ctx.build(rec, evidence_text(rec.dataset, &rec.evidence)?, l, BTreeMap::new()),
    }
}

/// Summarization record → example: summary is the answer, article the
/// reference. XSum records should go through [`merge_by_id`] first.
pub fn map_summarization(rec: &SourceRecord, ctx: &RepurposeContext) -> Result<Outcome, RepurposeError> {
    check_family(rec, Family::Summarization, "summarization")?;
    match ctx.lookup(rec)? {
        Target::Drop => Ok(dropped(rec, "is not retained")),
        Target::Label(l) => {
            let mut meta = BTreeMap::new();
            if rec.dataset == Dataset::XsumHalluc {
                meta.insert("merge_policy".into(), "majority; ties dropped".into());
            }
            ctx.build(rec, evidence_text(rec.dataset, &rec.evidence)?, l, meta)
        }
    }
}

/// Dispatches to the adapter for the record's dataset family.
pub fn map_record(rec: &SourceRecord, ctx: &RepurposeContext) -> Result<Outcome, RepurposeError> {
    match rec.dataset.family() {
        Family::FactChecking => map_fact_checking(rec, ctx),
        Family::Nli => map_nli(rec, ctx),
        Family::Summarization => map_summarization(rec, ctx),
    }
}

/// Totals for one adapter run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RepurposeSummary {
    pub converted: usize,
    pub dropped: usize,
    pub unknown_label: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RepurposeRun {
    pub examples: Vec<AttributionExample>,
    pub dropped: Vec<(String, String)>,
    pub unknown: Vec<RepurposeError>,
}

impl RepurposeRun {
    pub fn summary(&self) -> RepurposeSummary {
        RepurposeSummary {
            converted: self.examples.len(),
            dropped: self.dropped.len(),
            unknown_label: self.unknown.len(),
        }
    }
}

/// Converts a whole dataset. XSum records are merged by id first (ties are
/// reported as drops). Unknown labels are collected rather than aborting so
/// callers can decide how strict to be; any other error aborts.
pub fn repurpose_all(records: Vec<SourceRecord>, table: MappingTable, seed: u64) -> Result<RepurposeRun, RepurposeError> {
    let mut run = RepurposeRun::default();
    let records = if records.iter().any(|r| r.dataset == Dataset::XsumHalluc) {
        let merged = merge_by_id(records);
        for id in merged.ties {
            run.dropped.push((id, "xsum-halluc: tied hallucination types".into()));
        }
        merged.records
    } else {
        records
    };
    let ctx = RepurposeContext::new(table, seed).with_abstract_pool(&records);
    for rec in &records {
        match map_record(rec, &ctx) {
            Ok(Outcome::Converted(ex)) => run.examples.push(ex),
            Ok(Outcome::Dropped { id, reason }) => run.dropped.push((id, reason)),
            Err(e @ RepurposeError::UnknownLabel { .. }) => run.unknown.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}
