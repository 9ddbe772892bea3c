//! Synthetic graphs, planted-community datasets, and oracle helpers shared by
//! the test suites. Not part of the library API.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use m3s_core::data::{CitationDataset, SplitState};
use m3s_core::gcn::GcnModel;
use m3s_core::graph::{DenseMatrix, SparseMatrix};

/// Random connected symmetric adjacency: a random spanning tree plus
/// `extra_edges` random non-duplicate edges. Zero diagonal.
pub fn random_connected_adjacency(n: usize, extra_edges: usize, seed: u64) -> SparseMatrix {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        pairs.insert((parent.min(i), parent.max(i)));
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra_edges && attempts < extra_edges * 20 {
        attempts += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && pairs.insert((a.min(b), a.max(b))) {
            added += 1;
        }
    }
    let mut triplets = Vec::with_capacity(pairs.len() * 2);
    for &(a, b) in &pairs {
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    SparseMatrix::from_triplets(n, n, &triplets).unwrap()
}

/// Uniform random dense matrix with entries in `[lo, hi)`.
pub fn random_dense(n_rows: usize, n_cols: usize, lo: f64, hi: f64, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n_rows * n_cols)
        .map(|_| lo + rng.random::<f64>() * (hi - lo))
        .collect();
    DenseMatrix::from_vec(n_rows, n_cols, values).unwrap()
}

/// Configuration for [`planted_dataset`].
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub n_features: usize,
    /// Edge probability within a class.
    pub intra_edge_prob: f64,
    /// Edge probability across classes.
    pub inter_edge_prob: f64,
    /// Probability that a feature inside the class's block is on.
    pub feature_on_in: f64,
    /// Probability that a feature outside the class's block is on.
    pub feature_on_out: f64,
    /// Union a random spanning chain so the graph is connected.
    pub ensure_connected: bool,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_nodes: 60,
            n_classes: 3,
            n_features: 24,
            intra_edge_prob: 0.2,
            inter_edge_prob: 0.01,
            feature_on_in: 0.5,
            feature_on_out: 0.05,
            ensure_connected: true,
        }
    }
}

/// Citation-network-like dataset with planted community structure: a
/// stochastic block model over round-robin class labels and sparse 0/1
/// features whose class-specific block lights up more often.
pub fn planted_dataset(cfg: &PlantedConfig, seed: u64) -> CitationDataset {
    assert!(cfg.n_nodes >= cfg.n_classes && cfg.n_classes >= 1);
    assert!(cfg.n_features >= cfg.n_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_nodes;
    let k = cfg.n_classes;

    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }

    let block = cfg.n_features / k;
    let mut rows = Vec::with_capacity(n);
    for &label in &labels {
        let lo = label * block;
        let hi = if label == k - 1 { cfg.n_features } else { lo + block };
        let mut row = vec![0.0; cfg.n_features];
        for (j, value) in row.iter_mut().enumerate() {
            let p = if (lo..hi).contains(&j) {
                cfg.feature_on_in
            } else {
                cfg.feature_on_out
            };
            if rng.random::<f64>() < p {
                *value = 1.0;
            }
        }
        rows.push(row);
    }

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                cfg.intra_edge_prob
            } else {
                cfg.inter_edge_prob
            };
            if rng.random::<f64>() < p {
                pairs.insert((i, j));
            }
        }
    }
    if cfg.ensure_connected {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for w in order.windows(2) {
            pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }

    let mut triplets = Vec::with_capacity(pairs.len() * 2);
    for &(a, b) in &pairs {
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    let features = DenseMatrix::from_rows(&rows).unwrap();
    let adjacency = SparseMatrix::from_triplets(n, n, &triplets).unwrap();
    CitationDataset::new("planted", features, adjacency, labels, k).unwrap()
}

/// Deterministic split labeling the first `per_class` nodes of each class.
pub fn first_per_class_split(labels: &[usize], n_classes: usize, per_class: usize) -> SplitState {
    let mut counts = vec![0usize; n_classes];
    let mut assigned = BTreeMap::new();
    for (node, &label) in labels.iter().enumerate() {
        if counts[label] < per_class {
            counts[label] += 1;
            assigned.insert(node, label);
        }
    }
    assert!(
        counts.iter().all(|&c| c == per_class),
        "not enough nodes per class"
    );
    SplitState::initial(labels.len(), assigned).unwrap()
}

/// Central finite differences of the training loss with respect to every
/// weight entry. Dropout must be disabled on the model for this to match the
/// analytic gradients.
pub fn finite_difference_grads(
    model: &GcnModel,
    x: &DenseMatrix,
    a_hat: &SparseMatrix,
    split: &SplitState,
    eps: f64,
) -> Vec<DenseMatrix> {
    let mut probe = model.clone();
    let mut grads = Vec::new();
    for l in 0..model.n_layers() {
        let shape = (model.weights()[l].n_rows(), model.weights()[l].n_cols());
        let mut grad = DenseMatrix::zeros(shape.0, shape.1);
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                probe.perturb_weight(l, r, c, eps);
                let trace = probe.forward(x, a_hat, false, 0).unwrap();
                let loss_plus = probe.loss(&trace, split).unwrap();
                probe.perturb_weight(l, r, c, -2.0 * eps);
                let trace = probe.forward(x, a_hat, false, 0).unwrap();
                let loss_minus = probe.loss(&trace, split).unwrap();
                probe.perturb_weight(l, r, c, eps);
                grad.set(r, c, (loss_plus - loss_minus) / (2.0 * eps));
            }
        }
        grads.push(grad);
    }
    grads
}

/// `|a - b| / max(|a|, |b|, floor)` — the floor keeps finite-difference
/// round-off noise on vanishing entries from dominating the comparison.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Cosine similarity of two vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
