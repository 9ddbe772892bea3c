//! Deterministic seed derivation.
//!
//! Each stochastic component draws from a seed derived functionally from the
//! run seed, a domain tag, and an index. No component consumes another's
//! stream, so adding or removing one (e.g. the clustering pass) never shifts
//! the randomness seen by the rest of the pipeline.

/// Domain tag for per-stage training epochs.
pub const TAG_TRAIN: u64 = 1;
/// Domain tag for per-stage weight re-initialization (cold-start mode).
pub const TAG_REINIT: u64 = 2;
/// Domain tag for per-stage k-means.
pub const TAG_KMEANS: u64 = 3;
/// Domain tag for per-epoch dropout streams.
pub const TAG_EPOCH: u64 = 4;

/// splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from `(base, tag, index)`.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base.wrapping_add(splitmix64(tag))).wrapping_add(index))
}
