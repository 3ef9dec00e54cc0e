//! Collapsing multiply-annotated records (XSum hallucination annotations).

use std::collections::HashMap;

use super::SourceRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutcome {
    /// One record per id, in order of first appearance.
    pub records: Vec<SourceRecord>,
    /// Ids whose top label counts were tied; these records are dropped.
    pub ties: Vec<String>,
}

/// Merges records sharing an id into one whose `original_label` is the
/// strict majority (most frequent, case-insensitive) annotation. The first
/// record of each group supplies the text fields; the vote tally goes into
/// `extra["annotations"]`.
pub fn merge_by_id(records: Vec<SourceRecord>) -> MergeOutcome {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<SourceRecord>> = HashMap::new();
    for r in records {
        if !groups.contains_key(&r.id) {
            order.push(r.id.clone());
        }
        groups.entry(r.id.clone()).or_default().push(r);
    }

    let mut out = MergeOutcome {
        records: Vec::new(),
        ties: Vec::new(),
    };
    for id in order {
        let group = groups.remove(&id).expect("grouped id");
        if group.len() == 1 {
            out.records.extend(group);
            continue;
        }
        let mut counts: Vec<(String, usize)> = Vec::new();
        for r in &group {
            let key = r.original_label.trim().to_lowercase();
            match counts.iter_mut().find(|(k, _)| *k == key) {
                Some((_, n)) => *n += 1,
                None => counts.push((key, 1)),
            }
        }
        let best = counts.iter().map(|(_, n)| *n).max().unwrap_or(0);
        let winners: Vec<&(String, usize)> = counts.iter().filter(|(_, n)| *n == best).collect();
        if winners.len() != 1 {
            out.ties.push(id);
            continue;
        }
        let label = winners[0].0.clone();
        let tally = counts
            .iter()
            .map(|(k, n)| format!("{k}={n}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut merged = group.into_iter().next().expect("non-empty group");
        merged.original_label = label;
        merged.extra.insert("annotations".into(), tally);
        out.records.push(merged);
    }
    out
}
