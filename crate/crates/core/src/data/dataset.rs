//! Dataset and split-state types.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{DenseMatrix, SparseMatrix};

/// A loaded citation network: node features, symmetric adjacency with zero
/// diagonal (self loops are added later by the graph operators), ground-truth
/// labels, and the class count.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationDataset {
    name: String,
    features: DenseMatrix,
    adjacency: SparseMatrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl CitationDataset {
    pub fn new(
        name: impl Into<String>,
        features: DenseMatrix,
        adjacency: SparseMatrix,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        let n = features.n_rows();
        if adjacency.n_rows() != n || adjacency.n_cols() != n {
            return Err(Error::Dimension(format!(
                "adjacency is {}x{} but there are {} nodes",
                adjacency.n_rows(),
                adjacency.n_cols(),
                n
            )));
        }
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "{} labels for {} nodes",
                labels.len(),
                n
            )));
        }
        if n_classes == 0 {
            return Err(Error::Validation("n_classes must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Validation(format!(
                "label {} out of range for {} classes",
                bad, n_classes
            )));
        }
        let mut seen = vec![false; n_classes];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!(
                "class {} has no nodes",
                missing
            )));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::Validation("adjacency must be symmetric".into()));
        }
        if !adjacency.diagonal_is_zero() {
            return Err(Error::Validation(
                "adjacency must have a zero diagonal; self loops are added later".into(),
            ));
        }
        if !features.is_finite() {
            return Err(Error::Numeric("features must be finite".into()));
        }
        Ok(Self { name: name.into(), features, adjacency, labels, n_classes })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_nodes(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Undirected edge count (adjacency stores each edge twice).
    pub fn n_undirected_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }
}

/// The evolving labeled set across self-training stages. `assigned_labels`
/// holds ground truth for the initial labeled set and virtual labels for
/// nodes promoted later; ground truth on the evaluation set is never touched.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    labeled: BTreeSet<usize>,
    unlabeled: BTreeSet<usize>,
    assigned_labels: BTreeMap<usize, usize>,
    stage: usize,
}

impl SplitState {
    /// Stage-0 split: `assigned` are the initially labeled nodes with their
    /// ground-truth classes; all other nodes in `0..n_nodes` are unlabeled.
    pub fn initial(n_nodes: usize, assigned: BTreeMap<usize, usize>) -> Result<Self> {
        for &node in assigned.keys() {
            if node >= n_nodes {
                return Err(Error::Validation(format!(
                    "labeled node {} out of range for {} nodes",
                    node, n_nodes
                )));
            }
        }
        let labeled: BTreeSet<usize> = assigned.keys().copied().collect();
        let unlabeled: BTreeSet<usize> =
            (0..n_nodes).filter(|i| !labeled.contains(i)).collect();
        Ok(Self { labeled, unlabeled, assigned_labels: assigned, stage: 0 })
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn assigned_labels(&self) -> &BTreeMap<usize, usize> {
        &self.assigned_labels
    }

    pub fn assigned_label(&self, node: usize) -> Option<usize> {
        self.assigned_labels.get(&node).copied()
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn n_nodes(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    /// Move `additions` (node -> virtual label) from the unlabeled to the
    /// labeled set, advancing the stage counter. Labeled sets only grow.
    pub fn promote(&self, additions: &BTreeMap<usize, usize>) -> Result<Self> {
        for &node in additions.keys() {
            if !self.unlabeled.contains(&node) {
                return Err(Error::Internal(format!(
                    "node {} is not in the unlabeled set",
                    node
                )));
            }
        }
        let mut next = self.clone();
        for (&node, &label) in additions {
            next.unlabeled.remove(&node);
            next.labeled.insert(node);
            next.assigned_labels.insert(node, label);
        }
        next.stage += 1;
        Ok(next)
    }

    /// Partition invariant: labeled and unlabeled are disjoint and cover all
    /// nodes, and assigned labels exist exactly on the labeled set.
    pub fn check_partition(&self, n_nodes: usize) -> Result<()> {
        if self.labeled.len() + self.unlabeled.len() != n_nodes {
            return Err(Error::Internal("split does not cover all nodes".into()));
        }
        if self.labeled.intersection(&self.unlabeled).next().is_some() {
            return Err(Error::Internal("labeled and unlabeled sets overlap".into()));
        }
        if self.assigned_labels.len() != self.labeled.len()
            || !self.assigned_labels.keys().all(|k| self.labeled.contains(k))
        {
            return Err(Error::Internal(
                "assigned labels must be defined exactly on the labeled set".into(),
            ));
        }
        Ok(())
    }
}
