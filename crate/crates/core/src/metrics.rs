//! Scoring predictions against gold labels.
//!
//! Unparsed predictions (no label extracted) sit in a fourth column. They
//! count against recall and micro-F1 but never as a prediction of any class.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AttributionLabel, Prediction};

pub const UNPARSED: usize = 3;
pub const UNPARSED_POLICY: &str = "unparsed predictions count as incorrect";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no gold label for {} prediction(s): {}", .0.len(), .0.join(", "))]
    MissingGold(Vec<String>),
    #[error("more than one prediction for: {}", .0.join(", "))]
    DuplicatePrediction(Vec<String>),
    #[error("nothing to score")]
    Empty,
}

/// Rows are gold labels, columns are predicted labels plus `UNPARSED`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: AttributionLabel, predicted: Option<AttributionLabel>) {
        let col = predicted.map_or(UNPARSED, |p| p.index());
        self.counts[gold.index()][col] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn unparsed(&self) -> u64 {
        self.counts.iter().map(|r| r[UNPARSED]).sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn precision(&self, label: AttributionLabel) -> f64 {
        let c = label.index();
        ratio(self.counts[c][c], self.col_sum(c))
    }

    pub fn recall(&self, label: AttributionLabel) -> f64 {
        let c = label.index();
        ratio(self.counts[c][c], self.row_sum(c))
    }

    /// 2TP / (2TP + FP + FN); 0 when the class never occurs.
    pub fn f1(&self, label: AttributionLabel) -> f64 {
        let c = label.index();
        let tp = self.counts[c][c];
        let fp = self.col_sum(c) - tp;
        let fn_ = self.row_sum(c) - tp;
        ratio(2 * tp, 2 * tp + fp + fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(
    preds: &[Prediction],
    gold: &HashMap<String, AttributionLabel>,
) -> Result<ConfusionMatrix, MetricsError> {
    let missing: Vec<String> = preds
        .iter()
        .filter(|p| !gold.contains_key(&p.example_id))
        .map(|p| p.example_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingGold(missing));
    }
    let mut seen = HashSet::new();
    let dups: Vec<String> = preds
        .iter()
        .filter(|p| !seen.insert(p.example_id.as_str()))
        .map(|p| p.example_id.clone())
        .collect();
    if !dups.is_empty() {
        return Err(MetricsError::DuplicatePrediction(dups));
    }
    let mut m = ConfusionMatrix::default();
    for p in preds {
        m.add(gold[&p.example_id], p.predicted);
    }
    Ok(m)
}

/// F1 for (Attributable, Contradictory, Extrapolatory).
pub fn f1_per_class(m: &ConfusionMatrix) -> (f64, f64, f64) {
    use AttributionLabel::*;
    (m.f1(Attributable), m.f1(Contradictory), m.f1(Extrapolatory))
}

/// Equal to accuracy over all scored pairs.
pub fn micro_f1(m: &ConfusionMatrix) -> Result<f64, MetricsError> {
    match m.total() {
        0 => Err(MetricsError::Empty),
        n => Ok(m.diagonal() as f64 / n as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassF1 {
    pub attributable: f64,
    pub contradictory: f64,
    pub extrapolatory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: u64,
    pub micro_f1: f64,
    pub f1: ClassF1,
    pub unparsed: u64,
    /// Rows: gold A, C, E. Columns: predicted A, C, E, unparsed.
    pub confusion: [[u64; 4]; 3],
    pub unparsed_policy: String,
}

impl EvalReport {
    pub fn matrix(&self) -> ConfusionMatrix {
        ConfusionMatrix { counts: self.confusion }
    }
}

pub fn report_from_matrix(m: &ConfusionMatrix) -> Result<EvalReport, MetricsError> {
    let micro = micro_f1(m)?;
    let (a, c, e) = f1_per_class(m);
    Ok(EvalReport {
        n: m.total(),
        micro_f1: micro,
        f1: ClassF1 {
            attributable: a,
            contradictory: c,
            extrapolatory: e,
        },
        unparsed: m.unparsed(),
        confusion: m.counts,
        unparsed_policy: UNPARSED_POLICY.to_string(),
    })
}

pub fn report(preds: &[Prediction], gold: &HashMap<String, AttributionLabel>) -> Result<EvalReport, MetricsError> {
    report_from_matrix(&confusion(preds, gold)?)
}
