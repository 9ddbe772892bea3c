//! Label propagation baseline: clamped iterative diffusion over the
//! symmetric-normalized operator.

use serde::{Deserialize, Serialize};

use crate::data::{CitationDataset, SplitState};
use crate::error::{Error, Result};
use crate::gcn::argmax_row;
use crate::graph::{add_self_loops, spmm, sym_normalize, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Mixing weight between propagated mass and the clamped seed labels.
    pub alpha: f64,
    pub max_iter: usize,
    /// Max-norm change below which the iteration stops.
    pub tolerance: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { alpha: 0.99, max_iter: 1000, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub predicted: Vec<usize>,
    /// False when the iteration hit `max_iter` before the tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Core iteration: `F <- alpha * A_hat * F + (1 - alpha) * Y` with the rows
/// in `clamped` reset to their seed values after every sweep.
fn propagate(
    a_hat: &crate::graph::SparseMatrix,
    seed: &DenseMatrix,
    clamped: &std::collections::BTreeSet<usize>,
    config: &PropagationConfig,
) -> Result<(DenseMatrix, bool, usize)> {
    let mut current = seed.clone();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let mut next = spmm(a_hat, &current)?;
        for (v, &y) in next.values_mut().iter_mut().zip(seed.values()) {
            *v = config.alpha * *v + (1.0 - config.alpha) * y;
        }
        for &node in clamped {
            let row = next.row_mut(node);
            row.copy_from_slice(seed.row(node));
        }
        let delta = current
            .values()
            .iter()
            .zip(next.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok((current, converged, iterations))
}

/// Iterate `F <- alpha * A_hat * F + (1 - alpha) * Y` with labeled rows
/// clamped to their one-hot seed after every sweep, then predict the row
/// argmax (ties toward the lowest class).
pub fn label_propagation(
    dataset: &CitationDataset,
    split: &SplitState,
    config: &PropagationConfig,
) -> Result<PropagationResult> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha {} outside (0, 1)",
            config.alpha
        )));
    }
    if config.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    if !(config.tolerance >= 0.0 && config.tolerance.is_finite()) {
        return Err(Error::Config("tolerance must be non-negative".into()));
    }
    if split.labeled().is_empty() {
        return Err(Error::Config("label propagation needs labeled nodes".into()));
    }

    let n = dataset.n_nodes();
    let c = dataset.n_classes();
    let a_hat = sym_normalize(&add_self_loops(dataset.adjacency())?)?;

    let mut seed = DenseMatrix::zeros(n, c);
    for (&node, &label) in split.assigned_labels() {
        seed.set(node, label, 1.0);
    }

    let (scores, converged, iterations) = propagate(&a_hat, &seed, split.labeled(), config)?;
    if !converged {
        log::warn!(
            "label propagation did not converge in {} iterations",
            config.max_iter
        );
    }

    let predicted = (0..n).map(|i| argmax_row(scores.row(i))).collect();
    Ok(PropagationResult { predicted, converged, iterations })
}
