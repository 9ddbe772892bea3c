use std::collections::{BTreeMap, BTreeSet};

use m3s_testutil::random_dense;

use crate::cluster::{
    align, class_centroids, cluster_centroids, kmeans, max_min_ratio, pseudo_labels,
    ClusterCentroids,
};
use crate::data::SplitState;
use crate::error::Error;
use crate::graph::DenseMatrix;

fn blob_points() -> DenseMatrix {
    // two well-separated 2-D blobs of five points each
    DenseMatrix::from_rows(&[
        vec![0.0, 0.1],
        vec![0.2, -0.1],
        vec![-0.1, 0.0],
        vec![0.1, 0.2],
        vec![0.0, -0.2],
        vec![10.0, 10.1],
        vec![10.2, 9.9],
        vec![9.9, 10.0],
        vec![10.1, 10.2],
        vec![10.0, 9.8],
    ])
    .unwrap()
}

/// Exhaustive optimal 2-clustering over all bipartitions (n <= 12 points).
fn best_two_cluster_inertia(points: &DenseMatrix) -> f64 {
    let n = points.n_rows();
    let d = points.n_cols();
    assert!(n <= 12);
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let mut sums = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for i in 0..n {
            let side = ((mask >> i) & 1) as usize;
            counts[side] += 1;
            for (s, &v) in sums[side].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut total = 0.0;
        for i in 0..n {
            let side = ((mask >> i) & 1) as usize;
            for (j, &v) in points.row(i).iter().enumerate() {
                let c = sums[side][j] / counts[side] as f64;
                total += (v - c) * (v - c);
            }
        }
        best = best.min(total / n as f64);
    }
    best
}

#[test]
fn single_cluster_is_the_mean() {
    let points = random_dense(7, 3, -2.0, 2.0, 1);
    let model = kmeans(&points, 1, 0, 100).unwrap();
    for j in 0..3 {
        let mean: f64 = (0..7).map(|i| points.get(i, j)).sum::<f64>() / 7.0;
        assert!((model.centroids().get(0, j) - mean).abs() < 1e-12);
    }
    let expected: f64 = (0..7)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let d = points.get(i, j) - model.centroids().get(0, j);
                    d * d
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / 7.0;
    assert!((model.inertia() - expected).abs() < 1e-12);
}

#[test]
fn one_cluster_per_point_has_zero_inertia() {
    let points = random_dense(6, 2, 0.0, 1.0, 2);
    let model = kmeans(&points, 6, 3, 100).unwrap();
    assert!(model.inertia() < 1e-15);
    let distinct: BTreeSet<usize> = model.assignments().iter().copied().collect();
    assert_eq!(distinct.len(), 6);
}

#[test]
fn two_blobs_are_recovered_and_optimal() {
    let points = blob_points();
    let model = kmeans(&points, 2, 5, 100).unwrap();
    let first = model.assignments()[0];
    assert!(model.assignments()[..5].iter().all(|&a| a == first));
    assert!(model.assignments()[5..].iter().all(|&a| a != first));
    let oracle = best_two_cluster_inertia(&points);
    assert!(
        (model.inertia() - oracle).abs() < 1e-9,
        "kmeans inertia {} vs exhaustive {}",
        model.inertia(),
        oracle
    );
}

#[test]
fn kmeans_validates_arguments() {
    let points = random_dense(4, 2, 0.0, 1.0, 0);
    assert!(matches!(kmeans(&points, 0, 0, 10), Err(Error::Config(_))));
    assert!(matches!(kmeans(&points, 5, 0, 10), Err(Error::Config(_))));
    assert!(matches!(kmeans(&points, 2, 0, 0), Err(Error::Config(_))));
    let empty = DenseMatrix::zeros(0, 2);
    assert!(matches!(kmeans(&empty, 1, 0, 10), Err(Error::Config(_))));
}

#[test]
fn kmeans_is_deterministic_per_seed() {
    let points = random_dense(30, 4, -1.0, 1.0, 9);
    let a = kmeans(&points, 5, 42, 300).unwrap();
    let b = kmeans(&points, 5, 42, 300).unwrap();
    assert_eq!(a, b);
}

#[test]
fn inertia_is_self_consistent_with_assignments() {
    let points = random_dense(25, 3, -1.0, 1.0, 14);
    let model = kmeans(&points, 4, 7, 300).unwrap();
    let recomputed: f64 = model
        .assignments()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            points
                .row(i)
                .iter()
                .zip(model.centroids().row(c))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum::<f64>()
        / 25.0;
    assert!((model.inertia() - recomputed).abs() < 1e-8);
}

#[test]
fn more_clusters_never_increase_best_inertia() {
    let points = random_dense(60, 2, -1.0, 1.0, 21);
    let best = |k: usize| -> f64 {
        (0..10)
            .map(|seed| kmeans(&points, k, seed, 300).unwrap().inertia())
            .fold(f64::INFINITY, f64::min)
    };
    let mut prev = f64::INFINITY;
    for k in [1, 2, 4, 8, 16, 32] {
        let inertia = best(k);
        assert!(
            inertia <= prev + 1e-9,
            "k = {}: inertia {} above previous {}",
            k,
            inertia,
            prev
        );
        prev = inertia;
    }
}

#[test]
fn class_centroids_examples() {
    let embeddings = DenseMatrix::from_rows(&[
        vec![0.0, 0.0],
        vec![2.0, 2.0],
        vec![5.0, 1.0],
        vec![9.0, 9.0],
    ])
    .unwrap();
    // two labeled nodes in class 0 at (0,0) and (2,2), one in class 1
    let split =
        SplitState::initial(4, BTreeMap::from([(0, 0), (1, 0), (2, 1)])).unwrap();
    let mu = class_centroids(&embeddings, &split, 2).unwrap();
    assert_eq!(mu.row(0), &[1.0, 1.0]);
    assert_eq!(mu.row(1), &[5.0, 1.0]);
}

#[test]
fn class_centroids_reject_uncovered_classes() {
    let embeddings = DenseMatrix::zeros(3, 2);
    let split = SplitState::initial(3, BTreeMap::from([(0, 0)])).unwrap();
    assert!(matches!(
        class_centroids(&embeddings, &split, 2),
        Err(Error::DegenerateSplit(_))
    ));
}

#[test]
fn identical_embeddings_give_identical_centroids() {
    let embeddings = DenseMatrix::from_rows(&[vec![3.0, 4.0]; 4]).unwrap();
    let split =
        SplitState::initial(4, BTreeMap::from([(0, 0), (1, 1), (2, 0), (3, 1)])).unwrap();
    let mu = class_centroids(&embeddings, &split, 2).unwrap();
    assert_eq!(mu.row(0), mu.row(1));
}

#[test]
fn cluster_centroids_average_unlabeled_members_only() {
    let embeddings = DenseMatrix::from_rows(&[
        vec![0.0, 0.0],  // unlabeled, cluster 0
        vec![0.0, 2.0],  // unlabeled, cluster 0
        vec![50.0, 50.0], // labeled, cluster 0 (ignored)
        vec![7.0, 7.0],  // labeled, cluster 1 (cluster absent)
        vec![1.0, 1.0],  // unlabeled singleton, cluster 2
    ])
    .unwrap();
    let clusters = super::ClusterModel {
        centroids: DenseMatrix::zeros(3, 2),
        assignments: vec![0, 0, 0, 1, 2],
        k: 3,
        inertia: 0.0,
    };
    let unlabeled: BTreeSet<usize> = [0, 1, 4].into_iter().collect();
    let v = cluster_centroids(&embeddings, &clusters, &unlabeled).unwrap();
    assert!(v.is_present(0));
    assert_eq!(v.centroids().row(0), &[0.0, 1.0]);
    assert!(!v.is_present(1));
    assert!(v.is_present(2));
    assert_eq!(v.centroids().row(2), &[1.0, 1.0]);
}

fn centroids_from(rows: &[Vec<f64>], present: Vec<bool>) -> ClusterCentroids {
    ClusterCentroids {
        centroids: DenseMatrix::from_rows(rows).unwrap(),
        present,
    }
}

#[test]
fn align_picks_nearest_class() {
    let mu = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
    let v = centroids_from(&[vec![1.0, 1.0]], vec![true]);
    let map = align(&v, &mu).unwrap();
    // distances 2 vs 82
    assert_eq!(map.class_of(0), Some(0));
}

#[test]
fn align_zero_distance_and_tie_rules() {
    let mu = DenseMatrix::from_rows(&[vec![0.0], vec![4.0], vec![8.0]]).unwrap();
    let v = centroids_from(&[vec![8.0], vec![2.0]], vec![true, true]);
    let map = align(&v, &mu).unwrap();
    assert_eq!(map.class_of(0), Some(2)); // coincides with class 2
    assert_eq!(map.class_of(1), Some(0)); // equidistant from 0 and 1 -> 0
}

#[test]
fn align_skips_absent_clusters_and_checks_dims() {
    let mu = DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
    let v = centroids_from(&[vec![0.0, 0.0], vec![1.0, 1.0]], vec![false, true]);
    let map = align(&v, &mu).unwrap();
    assert_eq!(map.class_of(0), None);
    assert_eq!(map.class_of(1), Some(0));

    let bad = DenseMatrix::from_rows(&[vec![0.0]]).unwrap();
    assert!(matches!(align(&v, &bad), Err(Error::Dimension(_))));
}

#[test]
fn alignment_is_translation_invariant() {
    for seed in 0..10 {
        let mu = random_dense(4, 3, -1.0, 1.0, seed);
        let v_mat = random_dense(6, 3, -1.0, 1.0, seed + 50);
        let v = ClusterCentroids {
            centroids: v_mat.clone(),
            present: vec![true; 6],
        };
        let base = align(&v, &mu).unwrap();

        let shift = [0.7, -1.3, 2.9];
        let translate = |m: &DenseMatrix| {
            let mut out = m.clone();
            for i in 0..out.n_rows() {
                for (j, &s) in shift.iter().enumerate() {
                    out.set(i, j, out.get(i, j) + s);
                }
            }
            out
        };
        let v_shifted = ClusterCentroids {
            centroids: translate(&v_mat),
            present: vec![true; 6],
        };
        let shifted = align(&v_shifted, &translate(&mu)).unwrap();
        assert_eq!(base.cluster_to_class(), shifted.cluster_to_class());
    }
}

#[test]
fn pseudo_labels_cover_unlabeled_nodes() {
    let clusters = super::ClusterModel {
        centroids: DenseMatrix::zeros(1, 2),
        assignments: vec![0, 0, 0],
        k: 1,
        inertia: 0.0,
    };
    let mu = DenseMatrix::from_rows(&[vec![0.0, 0.0]; 4]).unwrap();
    let v = centroids_from(&[vec![0.0, 0.0]], vec![true]);
    let mut map = align(&v, &mu).unwrap();
    map.cluster_to_class.insert(0, 3);
    let unlabeled: BTreeSet<usize> = [0, 2].into_iter().collect();
    let pseudo = pseudo_labels(&clusters, &map, &unlabeled).unwrap();
    assert_eq!(pseudo, BTreeMap::from([(0, 3), (2, 3)]));

    let empty = BTreeSet::new();
    assert!(pseudo_labels(&clusters, &map, &empty).unwrap().is_empty());
}

#[test]
fn pseudo_labels_fail_on_uncovered_cluster() {
    let clusters = super::ClusterModel {
        centroids: DenseMatrix::zeros(2, 1),
        assignments: vec![0, 1],
        k: 2,
        inertia: 0.0,
    };
    let map = super::AlignmentMap {
        cluster_to_class: BTreeMap::from([(0, 0)]),
        class_centroids: DenseMatrix::zeros(1, 1),
        cluster_centroids: DenseMatrix::zeros(2, 1),
    };
    let unlabeled: BTreeSet<usize> = [1].into_iter().collect();
    assert!(matches!(
        pseudo_labels(&clusters, &map, &unlabeled),
        Err(Error::Internal(_))
    ));
}

#[test]
fn max_min_ratio_examples() {
    let balanced = BTreeMap::from([(0, 0), (1, 1), (2, 0), (3, 1)]);
    assert_eq!(max_min_ratio(&balanced, 2).unwrap(), 0.0);

    let skewed = BTreeMap::from([(0, 0), (1, 0), (2, 1)]);
    assert!((max_min_ratio(&skewed, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);

    let collapsed = BTreeMap::from([(0, 1), (1, 1), (2, 1)]);
    assert_eq!(max_min_ratio(&collapsed, 3).unwrap(), 1.0);

    let empty = BTreeMap::new();
    assert!(matches!(max_min_ratio(&empty, 2), Err(Error::Config(_))));
}
