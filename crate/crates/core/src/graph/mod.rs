//! Sparse-matrix representation and graph-specific linear algebra.

mod dense;
mod ops;
mod sparse;

pub use dense::DenseMatrix;
pub use ops::{add_self_loops, row_normalize, smooth, spmm, sym_normalize};
pub use sparse::SparseMatrix;
