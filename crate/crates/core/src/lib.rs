//! Semi-supervised node classification on citation graphs with few labels.
//!
//! The crate is organized around the training pipeline:
//!
//! - [`graph`] — CSR sparse matrices, dense matrices, and the symmetric
//!   normalization / smoothing operators every other module consumes.
//! - [`data`] — citation-network ingestion, a canonical on-disk format,
//!   and seeded labeled/unlabeled split sampling.
//! - [`gcn`] — a from-scratch multi-layer graph convolutional network with
//!   hand-derived reverse-mode gradients and Adam.
//! - [`cluster`] — k-means over node embeddings, class/cluster centroids,
//!   the aligning mechanism, and pseudo-label construction.
//! - [`train`] — confidence-based self-training, the multi-stage framework,
//!   and the cluster-checked (M3S) variant.
//! - [`lp`] — the label propagation baseline.
//!
//! All randomness flows through explicitly seeded generators; identical
//! seeds give bitwise-identical results.

pub mod cluster;
pub mod data;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod lp;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
