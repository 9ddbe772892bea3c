//! Staged training procedures: confidence-based self-training, the
//! multi-stage framework that repeats it, and the cluster-checked variant
//! that accepts a confident candidate only when the pseudo-label derived
//! from clustering agrees with its predicted class.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{align, class_centroids, cluster_centroids, kmeans, max_min_ratio, pseudo_labels};
use crate::data::{CitationDataset, SplitState};
use crate::error::{Error, Result};
use crate::gcn::{accuracy, argmax_row, GcnModel};
use crate::graph::{add_self_loops, row_normalize, sym_normalize, DenseMatrix, SparseMatrix};
use crate::seed::{derive_seed, TAG_KMEANS, TAG_REINIT, TAG_TRAIN};

const KMEANS_MAX_ITER: usize = 300;

/// Which embedding the clustering pass consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    /// The output probability matrix (the literal reading of the procedure).
    Probabilities,
    /// The activation of the last hidden layer.
    LastHidden,
}

/// Behaviour of the self-checking filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfCheck {
    /// Accept a candidate only when its cluster-aligned pseudo-label matches
    /// its selection class.
    ClusterAligned,
    /// Accept every candidate (diagnostic mode; reduces the checked variant
    /// to plain multi-stage training).
    ForceAccept,
}

/// Hyper-parameters of a staged training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    /// Number of enlargement stages K.
    pub n_stages: usize,
    /// Nodes added per class per stage (t).
    pub additions_per_class: usize,
    pub epochs_per_stage: usize,
    /// Continue from the current weights between stages instead of
    /// re-initializing.
    pub warm_start: bool,
    /// Number of graph-convolution layers (weight matrices).
    pub layers: usize,
    pub hidden_dim: usize,
    /// Number of k-means clusters for the self-checking pass.
    pub clusters_k: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub l2: f64,
    pub seed: u64,
    /// L1-normalize feature rows before training.
    pub normalize_features: bool,
    pub embedding: EmbeddingSource,
    pub self_check: SelfCheck,
}

impl StageConfig {
    /// Baseline hyper-parameters: one stage, 200 epochs, 2 layers of 16
    /// hidden units, learning rate 0.01, dropout 0.5, L2 5e-4, 200 clusters.
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            n_stages: 1,
            additions_per_class: 1,
            epochs_per_stage: 200,
            warm_start: true,
            layers: 2,
            hidden_dim: 16,
            clusters_k: 200,
            learning_rate: 0.01,
            dropout: 0.5,
            l2: 5e-4,
            seed,
            normalize_features: true,
            embedding: EmbeddingSource::Probabilities,
            self_check: SelfCheck::ClusterAligned,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stages == 0 {
            return Err(Error::Config("n_stages must be at least 1".into()));
        }
        if self.additions_per_class == 0 {
            return Err(Error::Config("additions_per_class must be at least 1".into()));
        }
        if self.epochs_per_stage == 0 {
            return Err(Error::Config("epochs_per_stage must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(Error::Config("need at least one layer".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        if self.clusters_k == 0 {
            return Err(Error::Config("clusters_k must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Default additions per class: roughly double the per-class supervision of
/// the initial labeled set each stage.
pub fn default_additions_per_class(initial_labeled: usize, n_classes: usize) -> usize {
    let per_class = initial_labeled as f64 / n_classes as f64;
    ((per_class + 0.5).floor() as usize).max(1)
}

/// Per-stage observability record. Serialized as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    /// Candidates proposed per class by the confidence selection.
    pub proposed_per_class: Vec<usize>,
    /// Candidates that survived the self-check (equal to proposed when no
    /// check runs).
    pub accepted_per_class: Vec<usize>,
    /// Fraction of accepted virtual labels that match the ground truth;
    /// absent when nothing was accepted.
    pub virtual_label_precision: Option<f64>,
    /// Accuracy over the initial unlabeled set after the post-stage training.
    pub accuracy_after_stage: Option<f64>,
    /// Balance metric of the pseudo-labels (cluster-checked runs only).
    pub max_min_ratio: Option<f64>,
}

impl StageReport {
    pub fn proposed_total(&self) -> usize {
        self.proposed_per_class.iter().sum()
    }

    pub fn accepted_total(&self) -> usize {
        self.accepted_per_class.iter().sum()
    }
}

/// One JSON object per stage, newline-terminated.
pub fn stage_reports_to_jsonl(reports: &[StageReport]) -> Result<String> {
    let mut out = String::new();
    for report in reports {
        out.push_str(&serde_json::to_string(report)?);
        out.push('\n');
    }
    Ok(out)
}

/// Feature matrix (optionally row-normalized) and the normalized operator
/// with self loops.
pub fn prepare_inputs(
    dataset: &CitationDataset,
    normalize_features: bool,
) -> Result<(DenseMatrix, SparseMatrix)> {
    let features = if normalize_features {
        row_normalize(dataset.features())
    } else {
        dataset.features().clone()
    };
    let a_hat = sym_normalize(&add_self_loops(dataset.adjacency())?)?;
    Ok((features, a_hat))
}

fn model_dims(dataset: &CitationDataset, config: &StageConfig) -> Vec<usize> {
    let mut dims = Vec::with_capacity(config.layers + 1);
    dims.push(dataset.n_features());
    for _ in 0..config.layers.saturating_sub(1) {
        dims.push(config.hidden_dim);
    }
    dims.push(dataset.n_classes());
    dims
}

/// For each class, the `t` unlabeled vertices with the largest probability
/// for that class, ranked descending with ties toward the lower node index.
/// A vertex is only eligible for its argmax class, so no vertex is selected
/// twice. Classes without candidates are absent from the map.
pub fn select_top_confident(
    z: &DenseMatrix,
    unlabeled: &std::collections::BTreeSet<usize>,
    t: usize,
) -> Result<BTreeMap<usize, Vec<usize>>> {
    if t == 0 {
        return Err(Error::Config("t must be at least 1".into()));
    }
    let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &node in unlabeled {
        if node >= z.n_rows() {
            return Err(Error::Validation(format!(
                "unlabeled node {} outside the {} prediction rows",
                node,
                z.n_rows()
            )));
        }
        let class = argmax_row(z.row(node));
        per_class.entry(class).or_default().push(node);
    }
    for (&class, nodes) in per_class.iter_mut() {
        nodes.sort_by(|&a, &b| {
            z.get(b, class)
                .total_cmp(&z.get(a, class))
                .then(a.cmp(&b))
        });
        nodes.truncate(t);
    }
    Ok(per_class)
}

/// One plain self-training enlargement: the top-t confident unlabeled
/// vertices of each class move to the labeled set with their selection class
/// as virtual label.
pub fn self_training_stage(
    model: &GcnModel,
    x: &DenseMatrix,
    a_hat: &SparseMatrix,
    split: &SplitState,
    t: usize,
) -> Result<SplitState> {
    let (z, _) = model.predict(x, a_hat)?;
    let candidates = select_top_confident(&z, split.unlabeled(), t)?;
    let mut additions = BTreeMap::new();
    for (&class, nodes) in &candidates {
        for &node in nodes {
            additions.insert(node, class);
        }
    }
    split.promote(&additions)
}

/// One cluster-checked enlargement: k-means over the embeddings of all
/// nodes, centroid alignment, pseudo-labels, then the confidence selection
/// filtered by pseudo-label agreement.
pub fn m3s_stage(
    model: &GcnModel,
    x: &DenseMatrix,
    a_hat: &SparseMatrix,
    split: &SplitState,
    dataset: &CitationDataset,
    config: &StageConfig,
) -> Result<(SplitState, StageReport)> {
    let n_classes = dataset.n_classes();
    let trace = model.forward(x, a_hat, false, 0)?;
    let embeddings = match config.embedding {
        EmbeddingSource::Probabilities => trace.probabilities().clone(),
        EmbeddingSource::LastHidden => trace
            .last_hidden()
            .ok_or_else(|| {
                Error::Config("single-layer model has no hidden embedding".into())
            })?
            .clone(),
    };
    let stage = split.stage() + 1;
    let km_seed = derive_seed(config.seed, TAG_KMEANS, stage as u64);
    let clusters = kmeans(&embeddings, config.clusters_k, km_seed, KMEANS_MAX_ITER)?;
    let mu = class_centroids(&embeddings, split, n_classes)?;
    let v = cluster_centroids(&embeddings, &clusters, split.unlabeled())?;
    let alignment = align(&v, &mu)?;
    let pseudo = pseudo_labels(&clusters, &alignment, split.unlabeled())?;

    let z = trace.probabilities();
    let candidates = select_top_confident(z, split.unlabeled(), config.additions_per_class)?;
    let mut additions: BTreeMap<usize, usize> = BTreeMap::new();
    let mut proposed = vec![0usize; n_classes];
    let mut accepted = vec![0usize; n_classes];
    for (&class, nodes) in &candidates {
        proposed[class] = nodes.len();
        for &node in nodes {
            let pass = match config.self_check {
                SelfCheck::ForceAccept => true,
                SelfCheck::ClusterAligned => pseudo.get(&node) == Some(&class),
            };
            if pass {
                additions.insert(node, class);
                accepted[class] += 1;
            }
        }
    }
    let next = split.promote(&additions)?;
    let precision = virtual_label_precision(&additions, dataset.labels());
    let ratio = if pseudo.is_empty() {
        None
    } else {
        Some(max_min_ratio(&pseudo, n_classes)?)
    };
    Ok((
        next,
        StageReport {
            stage,
            proposed_per_class: proposed,
            accepted_per_class: accepted,
            virtual_label_precision: precision,
            accuracy_after_stage: None,
            max_min_ratio: ratio,
        },
    ))
}

fn virtual_label_precision(
    additions: &BTreeMap<usize, usize>,
    ground_truth: &[usize],
) -> Option<f64> {
    if additions.is_empty() {
        return None;
    }
    let correct = additions
        .iter()
        .filter(|(&node, &label)| ground_truth[node] == label)
        .count();
    Some(correct as f64 / additions.len() as f64)
}

fn diff_report(
    stage: usize,
    before: &SplitState,
    after: &SplitState,
    dataset: &CitationDataset,
) -> StageReport {
    let mut additions = BTreeMap::new();
    for (&node, &label) in after.assigned_labels() {
        if !before.labeled().contains(&node) {
            additions.insert(node, label);
        }
    }
    let mut per_class = vec![0usize; dataset.n_classes()];
    for &label in additions.values() {
        per_class[label] += 1;
    }
    StageReport {
        stage,
        proposed_per_class: per_class.clone(),
        accepted_per_class: per_class,
        virtual_label_precision: virtual_label_precision(&additions, dataset.labels()),
        accuracy_after_stage: None,
        max_min_ratio: None,
    }
}

/// Plain GCN training on the initial split: the stage-0 phase alone.
pub fn train_gcn_baseline(
    dataset: &CitationDataset,
    split: &SplitState,
    config: &StageConfig,
) -> Result<(f64, GcnModel)> {
    config.validate()?;
    let (x, a_hat) = prepare_inputs(dataset, config.normalize_features)?;
    let dims = model_dims(dataset, config);
    let mut model = GcnModel::init(&dims, config.dropout, config.l2, config.seed)?;
    model.train_epochs(
        &x,
        &a_hat,
        split,
        config.epochs_per_stage,
        config.learning_rate,
        derive_seed(config.seed, TAG_TRAIN, 0),
    )?;
    let (_, predicted) = model.predict(&x, &a_hat)?;
    let acc = accuracy(&predicted, dataset.labels(), split.unlabeled())?;
    Ok((acc, model))
}

/// The multi-stage framework: train on the initial split, then K rounds of
/// {select top-t per class, promote with virtual labels, retrain}. Accuracy
/// is always measured on the initial unlabeled set against ground truth.
/// With `n_stages = 1` this is exactly the self-training baseline.
pub fn multi_stage_train(
    dataset: &CitationDataset,
    split0: &SplitState,
    config: &StageConfig,
) -> Result<(f64, Vec<StageReport>)> {
    config.validate()?;
    let (x, a_hat) = prepare_inputs(dataset, config.normalize_features)?;
    let dims = model_dims(dataset, config);
    let u0 = split0.unlabeled().clone();
    let mut model = GcnModel::init(&dims, config.dropout, config.l2, config.seed)?;
    let mut split = split0.clone();
    model.train_epochs(
        &x,
        &a_hat,
        &split,
        config.epochs_per_stage,
        config.learning_rate,
        derive_seed(config.seed, TAG_TRAIN, 0),
    )?;

    let mut reports = Vec::with_capacity(config.n_stages);
    let mut final_accuracy = None;
    for stage in 1..=config.n_stages {
        let next = self_training_stage(&model, &x, &a_hat, &split, config.additions_per_class)?;
        let mut report = diff_report(stage, &split, &next, dataset);
        split = next;
        if !config.warm_start {
            model = GcnModel::init(
                &dims,
                config.dropout,
                config.l2,
                derive_seed(config.seed, TAG_REINIT, stage as u64),
            )?;
        }
        model.train_epochs(
            &x,
            &a_hat,
            &split,
            config.epochs_per_stage,
            config.learning_rate,
            derive_seed(config.seed, TAG_TRAIN, stage as u64),
        )?;
        let (_, predicted) = model.predict(&x, &a_hat)?;
        let acc = accuracy(&predicted, dataset.labels(), &u0)?;
        report.accuracy_after_stage = Some(acc);
        final_accuracy = Some(acc);
        reports.push(report);
    }
    Ok((final_accuracy.expect("n_stages >= 1"), reports))
}

/// The cluster-checked variant of [`multi_stage_train`]: every enlargement
/// first builds pseudo-labels from k-means plus the aligning mechanism, and
/// only candidates whose pseudo-label agrees with their selection class are
/// promoted.
pub fn m3s_train(
    dataset: &CitationDataset,
    split0: &SplitState,
    config: &StageConfig,
) -> Result<(f64, Vec<StageReport>)> {
    config.validate()?;
    let (x, a_hat) = prepare_inputs(dataset, config.normalize_features)?;
    let dims = model_dims(dataset, config);
    let u0 = split0.unlabeled().clone();
    let mut model = GcnModel::init(&dims, config.dropout, config.l2, config.seed)?;
    let mut split = split0.clone();
    model.train_epochs(
        &x,
        &a_hat,
        &split,
        config.epochs_per_stage,
        config.learning_rate,
        derive_seed(config.seed, TAG_TRAIN, 0),
    )?;

    let mut reports = Vec::with_capacity(config.n_stages);
    let mut final_accuracy = None;
    for stage in 1..=config.n_stages {
        let (next, mut report) = m3s_stage(&model, &x, &a_hat, &split, dataset, config)?;
        split = next;
        if !config.warm_start {
            model = GcnModel::init(
                &dims,
                config.dropout,
                config.l2,
                derive_seed(config.seed, TAG_REINIT, stage as u64),
            )?;
        }
        model.train_epochs(
            &x,
            &a_hat,
            &split,
            config.epochs_per_stage,
            config.learning_rate,
            derive_seed(config.seed, TAG_TRAIN, stage as u64),
        )?;
        let (_, predicted) = model.predict(&x, &a_hat)?;
        let acc = accuracy(&predicted, dataset.labels(), &u0)?;
        report.accuracy_after_stage = Some(acc);
        final_accuracy = Some(acc);
        reports.push(report);
    }
    Ok((final_accuracy.expect("n_stages >= 1"), reports))
}
