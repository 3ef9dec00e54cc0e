//! Per-dataset tables from original labels to the three-way label space.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, RepurposeError};
use crate::seed::sha256_hex;
use crate::types::{parse_label, AttributionLabel};

/// Where one original label goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Label(AttributionLabel),
    Drop,
}

impl Target {
    fn parse(s: &str) -> Result<Target, String> {
        if s.trim().eq_ignore_ascii_case("drop") {
            return Ok(Target::Drop);
        }
        parse_label(s.trim()).map(Target::Label).map_err(|e| e.to_string())
    }
}

use AttributionLabel::{Attributable as A, Contradictory as C, Extrapolatory as E};

const FEVER_STYLE: &[(&str, Target)] = &[
    ("SUPPORTS", Target::Label(A)),
    ("REFUTES", Target::Label(C)),
    ("NOT ENOUGH INFO", Target::Label(E)),
];

const PUBHEALTH: &[(&str, Target)] = &[
    ("true", Target::Label(A)),
    ("false", Target::Label(C)),
    ("unproven", Target::Label(E)),
    ("mixture", Target::Label(E)),
];

// NOT ENOUGH INFO claims keep the label but receive a sentence from another
// article's abstract as evidence; see `map_fact_checking`.
const SCIFACT: &[(&str, Target)] = &[
    ("SUPPORT", Target::Label(A)),
    ("CONTRADICT", Target::Label(C)),
    ("NOT ENOUGH INFO", Target::Label(E)),
    ("NOT_ENOUGH_INFO", Target::Label(E)),
    ("NEI", Target::Label(E)),
];

/// Six retained MultiFC classes. Every other MultiFC label is dropped.
/// Replace with `--mapping-file` to choose a different six.
const MULTIFC_DEFAULT: &[(&str, Target)] = &[
    ("true", Target::Label(A)),
    ("mostly true", Target::Label(A)),
    ("half-true", Target::Label(E)),
    ("mostly false", Target::Label(C)),
    ("false", Target::Label(C)),
    ("pants on fire!", Target::Label(C)),
];

const NLI_THREE_WAY: &[(&str, Target)] = &[
    ("entailment", Target::Label(A)),
    ("contradiction", Target::Label(C)),
    ("neutral", Target::Label(E)),
    // SNLI marks pairs without annotator consensus with "-"
    ("-", Target::Drop),
];

const ANLI: &[(&str, Target)] = &[
    ("entailment", Target::Label(A)),
    ("contradiction", Target::Label(C)),
    ("neutral", Target::Label(E)),
    ("e", Target::Label(A)),
    ("c", Target::Label(C)),
    ("n", Target::Label(E)),
];

const SCITAIL: &[(&str, Target)] = &[("entails", Target::Label(A)), ("neutral", Target::Label(E))];

/// XSum hallucination records after `merge_by_id`; "gold" marks
/// (article, reference summary) pairs.
const XSUM: &[(&str, Target)] = &[
    ("intrinsic", Target::Label(C)),
    ("extrinsic", Target::Label(E)),
    ("gold", Target::Label(A)),
];

const XENT: &[(&str, Target)] = &[
    ("Non-factual Hallucination", Target::Label(C)),
    ("Intrinsic Hallucination", Target::Label(C)),
    ("Factual Hallucination", Target::Label(E)),
    ("Non-hallucinated", Target::Label(A)),
];

const FACTCC: &[(&str, Target)] = &[("CORRECT", Target::Label(A)), ("INCORRECT", Target::Label(E))];

fn defaults(dataset: Dataset) -> &'static [(&'static str, Target)] {
    match dataset {
        Dataset::Fever | Dataset::AdversarialFever | Dataset::Feverous | Dataset::VitaminC => FEVER_STYLE,
        Dataset::MultiFc => MULTIFC_DEFAULT,
        Dataset::PubHealth => PUBHEALTH,
        Dataset::SciFact => SCIFACT,
        Dataset::Snli | Dataset::MultiNli => NLI_THREE_WAY,
        Dataset::Anli => ANLI,
        Dataset::SciTail => SCITAIL,
        Dataset::XsumHalluc => XSUM,
        Dataset::Xent => XENT,
        Dataset::FactCc => FACTCC,
    }
}

fn normalize(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Label mapping for all datasets, optionally patched from a mapping file.
#[derive(Debug, Clone)]
pub struct MappingTable {
    tables: HashMap<Dataset, BTreeMap<String, Target>>,
    override_digest: Option<String>,
}

impl Default for MappingTable {
    fn default() -> Self {
        let tables = Dataset::ALL
            .iter()
            .map(|&d| {
                let t = defaults(d).iter().map(|(k, v)| (normalize(k), *v)).collect();
                (d, t)
            })
            .collect();
        MappingTable {
            tables,
            override_digest: None,
        }
    }
}

impl MappingTable {
    /// Looks up `label` (case-insensitive). MultiFC labels outside the table
    /// drop; for every other dataset an unlisted label is `None`.
    pub fn lookup(&self, dataset: Dataset, label: &str) -> Option<Target> {
        let hit = self.tables.get(&dataset).and_then(|t| t.get(&normalize(label))).copied();
        match (hit, dataset) {
            (None, Dataset::MultiFc) => Some(Target::Drop),
            (hit, _) => hit,
        }
    }

    /// Entries for one dataset, keyed by normalized label.
    pub fn entries(&self, dataset: Dataset) -> &BTreeMap<String, Target> {
        &self.tables[&dataset]
    }

    /// SHA-256 of the override file, when one was applied.
    pub fn override_digest(&self) -> Option<&str> {
        self.override_digest.as_deref()
    }

    /// Applies a JSON override of the form
    /// `{"<dataset>": {"<original label>": "<Attributable|Contradictory|Extrapolatory|DROP>"}}`.
    /// For MultiFC the file replaces the retained classes wholesale; for other
    /// datasets entries are patched in place.
    pub fn with_overrides_json(mut self, json: &str) -> Result<Self, RepurposeError> {
        let raw: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(json).map_err(|e| RepurposeError::MappingFile(e.to_string()))?;
        for (name, entries) in raw {
            let dataset: Dataset = name.parse().map_err(RepurposeError::MappingFile)?;
            let table = self.tables.entry(dataset).or_default();
            if dataset == Dataset::MultiFc {
                table.clear();
            }
            for (label, target) in entries {
                let target = Target::parse(&target)
                    .map_err(|e| RepurposeError::MappingFile(format!("{name}/{label}: {e}")))?;
                table.insert(normalize(&label), target);
            }
        }
        self.override_digest = Some(sha256_hex(json.as_bytes()));
        Ok(self)
    }

    pub fn with_overrides_file(self, path: &Path) -> Result<Self, RepurposeError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| RepurposeError::MappingFile(format!("{}: {e}", path.display())))?;
        self.with_overrides_json(&json)
    }

    /// Number of MultiFC classes mapped to a label.
    pub fn multifc_retained(&self) -> usize {
        self.entries(Dataset::MultiFc)
            .values()
            .filter(|t| matches!(t, Target::Label(_)))
            .count()
    }
}
