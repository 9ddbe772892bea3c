//! Seeded sampling of initial labeled/unlabeled splits.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{CitationDataset, SplitState};
use crate::error::{Error, Result};

/// Size specification for the initial labeled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    /// Fraction of all nodes, converted with round-half-up.
    LabelRate(f64),
    /// Fixed number of labeled nodes per class.
    PerClass(usize),
}

impl SplitSpec {
    /// Total labeled-set size implied by the spec on a given dataset.
    pub fn labeled_count(&self, n_nodes: usize, n_classes: usize) -> Result<usize> {
        match *self {
            SplitSpec::LabelRate(rate) => {
                if !(rate > 0.0 && rate <= 1.0) {
                    return Err(Error::Sampling(format!(
                        "label rate {} outside (0, 1]",
                        rate
                    )));
                }
                Ok((rate * n_nodes as f64 + 0.5).floor() as usize)
            }
            SplitSpec::PerClass(count) => {
                if count == 0 {
                    return Err(Error::Sampling("per-class count must be positive".into()));
                }
                Ok(count * n_classes)
            }
        }
    }
}

/// Sample a stage-0 split.
///
/// Balanced mode draws `size / n_classes` nodes per class without
/// replacement, distributing the remainder over distinct randomly chosen
/// classes. Unbalanced mode draws uniformly from all nodes and redraws
/// (up to 100 attempts) until every class is represented. Identical seeds
/// give identical splits.
pub fn sample_split(
    dataset: &CitationDataset,
    spec: SplitSpec,
    seed: u64,
    balanced: bool,
) -> Result<SplitState> {
    let n = dataset.n_nodes();
    let k = dataset.n_classes();
    let size = spec.labeled_count(n, k)?;
    if size > n {
        return Err(Error::Sampling(format!(
            "requested {} labeled nodes from {} total",
            size, n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let chosen: Vec<usize> = if balanced {
        if size < k {
            return Err(Error::Sampling(format!(
                "balanced split needs at least {} labeled nodes, requested {}",
                k, size
            )));
        }
        let mut pools: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (node, &label) in dataset.labels().iter().enumerate() {
            pools[label].push(node);
        }
        let base = size / k;
        let remainder = size % k;
        let mut extra = vec![0usize; k];
        for idx in sample(&mut rng, k, remainder) {
            extra[idx] = 1;
        }
        let mut chosen = Vec::with_capacity(size);
        for (class, pool) in pools.iter().enumerate() {
            let want: usize = base + extra[class];
            if want > pool.len() {
                return Err(Error::Sampling(format!(
                    "class {} has {} nodes, cannot label {}",
                    class,
                    pool.len(),
                    want
                )));
            }
            for idx in sample(&mut rng, pool.len(), want) {
                chosen.push(pool[idx]);
            }
        }
        chosen
    } else {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let draw: Vec<usize> = sample(&mut rng, n, size).into_iter().collect();
            let mut seen = vec![false; k];
            for &node in &draw {
                seen[dataset.labels()[node]] = true;
            }
            if seen.iter().all(|&s| s) {
                break draw;
            }
            if attempt >= 100 {
                return Err(Error::Sampling(format!(
                    "no draw of {} nodes covered all {} classes in 100 attempts",
                    size, k
                )));
            }
        }
    };

    let assigned: BTreeMap<usize, usize> = chosen
        .into_iter()
        .map(|node| (node, dataset.labels()[node]))
        .collect();
    let split = SplitState::initial(n, assigned)?;
    split.check_partition(n)?;
    Ok(split)
}
