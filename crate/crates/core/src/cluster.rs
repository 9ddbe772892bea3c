//! Clustering machinery for the self-checking mechanism: k-means over node
//! embeddings, class and cluster centroids, the aligning mechanism that maps
//! clusters to their nearest class, and the balance metric.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::SplitState;
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

/// Result of a k-means run. `inertia` is the mean squared distance of every
/// point to its assigned centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: DenseMatrix,
    assignments: Vec<usize>,
    k: usize,
    inertia: f64,
}

impl ClusterModel {
    pub fn centroids(&self) -> &DenseMatrix {
        &self.centroids
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }
}

/// Per-cluster centroids of the unlabeled members. Clusters whose members are
/// all labeled are absent rather than zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCentroids {
    centroids: DenseMatrix,
    present: Vec<bool>,
}

impl ClusterCentroids {
    pub fn centroids(&self) -> &DenseMatrix {
        &self.centroids
    }

    pub fn is_present(&self, cluster: usize) -> bool {
        self.present.get(cluster).copied().unwrap_or(false)
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }
}

/// The cluster-to-class map produced by the aligning mechanism, together with
/// the centroid matrices it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    cluster_to_class: BTreeMap<usize, usize>,
    class_centroids: DenseMatrix,
    cluster_centroids: DenseMatrix,
}

impl AlignmentMap {
    pub fn class_of(&self, cluster: usize) -> Option<usize> {
        self.cluster_to_class.get(&cluster).copied()
    }

    pub fn cluster_to_class(&self) -> &BTreeMap<usize, usize> {
        &self.cluster_to_class
    }

    pub fn class_centroids(&self) -> &DenseMatrix {
        &self.class_centroids
    }

    pub fn cluster_centroids(&self) -> &DenseMatrix {
        &self.cluster_centroids
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Nearest centroid with ties broken toward the lowest index.
fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = squared_distance(point, centroids.row(0));
    for c in 1..centroids.n_rows() {
        let d = squared_distance(point, centroids.row(c));
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (best, best_d)
}

fn mean_inertia(points: &DenseMatrix, centroids: &DenseMatrix, assignments: &[usize]) -> f64 {
    let total: f64 = assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(points.row(i), centroids.row(c)))
        .sum();
    total / points.n_rows() as f64
}

/// Lloyd's algorithm with k-means++ initialization.
///
/// Stops when assignments are unchanged or after `max_iter` iterations.
/// Clusters that empty out are reseeded to the point currently farthest from
/// its own centroid, so `k` never silently shrinks.
pub fn kmeans(points: &DenseMatrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel> {
    let n = points.n_rows();
    if n == 0 {
        return Err(Error::Config("k-means needs at least one point".into()));
    }
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {} exceeds {} points", k, n)));
    }
    if max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    let d = points.n_cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: subsequent centers drawn with probability
    // proportional to the squared distance to the nearest chosen center.
    let mut centroids = DenseMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in dist2.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = Some(i);
                    break;
                }
            }
            // guard against accumulated rounding at the top end
            pick.unwrap_or_else(|| {
                dist2
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            // all remaining points coincide with chosen centers
            (0..n)
                .find(|&i| !chosen[i])
                .ok_or_else(|| Error::Config("k exceeds distinct points".into()))?
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d2 = squared_distance(points.row(i), centroids.row(c));
            if d2 < dist2[i] {
                dist2[i] = d2;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    for _iter in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(points.row(i), &centroids);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        if !changed && _iter > 0 {
            break;
        }

        let mut sums = DenseMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            let row = points.row(i);
            let target = sums.row_mut(c);
            for (t, &v) in target.iter_mut().zip(row) {
                *t += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let target = centroids.row_mut(c);
                let source = sums.row(c);
                for (t, &s) in target.iter_mut().zip(source) {
                    *t = s / counts[c] as f64;
                }
            }
        }

        // Reseed empty clusters to the point farthest from its own centroid.
        let mut stolen = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_idx = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if stolen[i] || counts[assignments[i]] <= 1 {
                    continue;
                }
                let d2 = squared_distance(points.row(i), centroids.row(assignments[i]));
                if d2 > far_d {
                    far_d = d2;
                    far_idx = Some(i);
                }
            }
            let far = far_idx.ok_or_else(|| {
                Error::Internal("cannot repair empty cluster: no movable point".into())
            })?;
            stolen[far] = true;
            counts[assignments[far]] -= 1;
            counts[c] = 1;
            centroids.row_mut(c).copy_from_slice(points.row(far));
            assignments[far] = c;
        }

        let inertia = mean_inertia(points, &centroids, &assignments);
        debug_assert!(
            inertia <= prev_inertia + 1e-9,
            "inertia increased: {} -> {}",
            prev_inertia,
            inertia
        );
        prev_inertia = inertia;
    }

    let inertia = mean_inertia(points, &centroids, &assignments);
    Ok(ClusterModel { centroids, assignments, k, inertia })
}

/// Mean embedding of the labeled nodes of each class (virtual labels count).
pub fn class_centroids(
    embeddings: &DenseMatrix,
    split: &SplitState,
    n_classes: usize,
) -> Result<DenseMatrix> {
    if n_classes == 0 {
        return Err(Error::Config("n_classes must be positive".into()));
    }
    let d = embeddings.n_cols();
    let mut sums = DenseMatrix::zeros(n_classes, d);
    let mut counts = vec![0usize; n_classes];
    for (&node, &label) in split.assigned_labels() {
        if node >= embeddings.n_rows() {
            return Err(Error::Validation(format!("labeled node {} out of range", node)));
        }
        if label >= n_classes {
            return Err(Error::Validation(format!(
                "label {} out of range for {} classes",
                label, n_classes
            )));
        }
        counts[label] += 1;
        let row = embeddings.row(node);
        let target = sums.row_mut(label);
        for (t, &v) in target.iter_mut().zip(row) {
            *t += v;
        }
    }
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::DegenerateSplit(format!(
                "class {} has no labeled nodes",
                class
            )));
        }
        let target = sums.row_mut(class);
        for t in target.iter_mut() {
            *t /= count as f64;
        }
    }
    Ok(sums)
}

/// Mean embedding of the unlabeled members of each cluster. Clusters without
/// unlabeled members are marked absent.
pub fn cluster_centroids(
    embeddings: &DenseMatrix,
    clusters: &ClusterModel,
    unlabeled: &BTreeSet<usize>,
) -> Result<ClusterCentroids> {
    if clusters.assignments().len() != embeddings.n_rows() {
        return Err(Error::Validation(format!(
            "{} assignments for {} embeddings",
            clusters.assignments().len(),
            embeddings.n_rows()
        )));
    }
    let k = clusters.k();
    let d = embeddings.n_cols();
    let mut sums = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for &node in unlabeled {
        if node >= embeddings.n_rows() {
            return Err(Error::Validation(format!("unlabeled node {} out of range", node)));
        }
        let cluster = clusters.assignments()[node];
        counts[cluster] += 1;
        let row = embeddings.row(node);
        let target = sums.row_mut(cluster);
        for (t, &v) in target.iter_mut().zip(row) {
            *t += v;
        }
    }
    let mut present = vec![false; k];
    for (cluster, &count) in counts.iter().enumerate() {
        if count > 0 {
            present[cluster] = true;
            let target = sums.row_mut(cluster);
            for t in target.iter_mut() {
                *t /= count as f64;
            }
        }
    }
    Ok(ClusterCentroids { centroids: sums, present })
}

/// The aligning mechanism: each present cluster maps to the class whose
/// centroid is nearest in squared Euclidean distance (ties toward the lowest
/// class index).
pub fn align(v: &ClusterCentroids, mu: &DenseMatrix) -> Result<AlignmentMap> {
    if v.centroids().n_cols() != mu.n_cols() {
        return Err(Error::Dimension(format!(
            "cluster centroids have dim {}, class centroids {}",
            v.centroids().n_cols(),
            mu.n_cols()
        )));
    }
    if mu.n_rows() == 0 {
        return Err(Error::Config("no class centroids".into()));
    }
    let mut cluster_to_class = BTreeMap::new();
    for cluster in 0..v.centroids().n_rows() {
        if !v.is_present(cluster) {
            continue;
        }
        let (class, _) = nearest(v.centroids().row(cluster), mu);
        cluster_to_class.insert(cluster, class);
    }
    Ok(AlignmentMap {
        cluster_to_class,
        class_centroids: mu.clone(),
        cluster_centroids: v.centroids().clone(),
    })
}

/// Pseudo-label every unlabeled node with the aligned class of its cluster.
pub fn pseudo_labels(
    clusters: &ClusterModel,
    alignment: &AlignmentMap,
    unlabeled: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, usize>> {
    let mut out = BTreeMap::new();
    for &node in unlabeled {
        if node >= clusters.assignments().len() {
            return Err(Error::Validation(format!("unlabeled node {} out of range", node)));
        }
        let cluster = clusters.assignments()[node];
        let class = alignment.class_of(cluster).ok_or_else(|| {
            Error::Internal(format!(
                "cluster {} holds unlabeled node {} but has no aligned class",
                cluster, node
            ))
        })?;
        out.insert(node, class);
    }
    Ok(out)
}

/// Balance metric: (max class count - min class count) / |pseudo|, counting
/// classes with no pseudo-labeled nodes as zero. Lower is more balanced.
pub fn max_min_ratio(pseudo: &BTreeMap<usize, usize>, n_classes: usize) -> Result<f64> {
    if pseudo.is_empty() {
        return Err(Error::Config("no pseudo-labels to measure".into()));
    }
    if n_classes == 0 {
        return Err(Error::Config("n_classes must be positive".into()));
    }
    let mut counts = vec![0usize; n_classes];
    for &class in pseudo.values() {
        if class >= n_classes {
            return Err(Error::Validation(format!(
                "pseudo-label {} out of range for {} classes",
                class, n_classes
            )));
        }
        counts[class] += 1;
    }
    let max = *counts.iter().max().unwrap();
    let min = *counts.iter().min().unwrap();
    Ok((max - min) as f64 / pseudo.len() as f64)
}

#[cfg(test)]
mod tests;
