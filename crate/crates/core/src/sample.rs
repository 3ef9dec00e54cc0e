//! Seeded subsampling that keeps the input order.

use std::collections::BTreeMap;

use rand::seq::index;
use thiserror::Error;

use crate::seed::record_rng;
use crate::types::{AttributionExample, AttributionLabel};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("asked for {requested} examples but the input has {available}")]
pub struct NotEnough {
    pub requested: usize,
    pub available: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub n: usize,
    pub seed: u64,
    pub stratify: bool,
    pub allow_fewer: bool,
}

fn pick(len: usize, n: usize, seed: u64, stratum: &str) -> Vec<usize> {
    let mut rng = record_rng(seed, "sample", stratum);
    index::sample(&mut rng, len, n).into_vec()
}

/// Per-stratum quotas proportional to stratum size (largest remainder;
/// ties go to the earlier stratum).
fn quotas(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let mut q: Vec<usize> = sizes.iter().map(|&s| s * n / total).collect();
    let mut rest: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (i, (s * n) % total)).collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let short = n - q.iter().sum::<usize>();
    for &(i, _) in rest.iter().take(short) {
        q[i] += 1;
    }
    q
}

fn stratum_key(label: Option<AttributionLabel>) -> String {
    label.map_or_else(|| "unlabeled".to_string(), |l| l.as_str().to_string())
}

/// Returns indices into `examples`, ascending.
pub fn sample_indices(examples: &[AttributionExample], opts: SampleOptions) -> Result<Vec<usize>, NotEnough> {
    let len = examples.len();
    if opts.n > len && !opts.allow_fewer {
        return Err(NotEnough {
            requested: opts.n,
            available: len,
        });
    }
    let n = opts.n.min(len);
    let mut chosen = if !opts.stratify || n == 0 {
        pick(len, n, opts.seed, "")
    } else {
        let mut strata: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
        for (i, ex) in examples.iter().enumerate() {
            let order = ex.label.map_or(3, |l| l.index());
            strata.entry((order, stratum_key(ex.label))).or_default().push(i);
        }
        let groups: Vec<(&String, &Vec<usize>)> = strata.iter().map(|((_, k), v)| (k, v)).collect();
        let q = quotas(&groups.iter().map(|(_, v)| v.len()).collect::<Vec<_>>(), n);
        groups
            .iter()
            .zip(q)
            .flat_map(|((key, members), take)| {
                pick(members.len(), take, opts.seed, key)
                    .into_iter()
                    .map(|j| members[j])
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn sample(examples: &[AttributionExample], opts: SampleOptions) -> Result<Vec<AttributionExample>, NotEnough> {
    Ok(sample_indices(examples, opts)?
        .into_iter()
        .map(|i| examples[i].clone())
        .collect())
}
