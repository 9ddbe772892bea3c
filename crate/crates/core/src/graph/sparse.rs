//! CSR sparse matrix in canonical form: within each row the column indices
//! are strictly increasing and no duplicates are stored.

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from raw CSR arrays, validating the canonical-form invariants.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::Validation(format!(
                "row_offsets length {} != n_rows + 1 = {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::Validation("row_offsets[0] must be 0".into()));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Validation(format!(
                "col_indices length {} != values length {}",
                col_indices.len(),
                values.len()
            )));
        }
        if *row_offsets.last().unwrap() != values.len() {
            return Err(Error::Validation(
                "last row offset must equal the number of stored entries".into(),
            ));
        }
        for w in row_offsets.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Validation("row_offsets must be non-decreasing".into()));
            }
        }
        for i in 0..n_rows {
            let row = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in row.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::Validation(format!(
                        "row {} column indices must be strictly increasing",
                        i
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= n_cols {
                    return Err(Error::Validation(format!(
                        "row {} has column index {} >= n_cols {}",
                        i, last, n_cols
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("sparse matrix entries must be finite".into()));
        }
        Ok(Self { n_rows, n_cols, row_offsets, col_indices, values })
    }

    /// Build from (row, col, value) triplets. Duplicate coordinates are
    /// rejected rather than summed, keeping construction loss-free.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Validation(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        for &(r, c, _) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Validation(format!(
                    "entry ({}, {}) outside {}x{}",
                    r, c, n_rows, n_cols
                )));
            }
            row_offsets[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = entries.iter().map(|&(_, c, _)| c).collect();
        let values = entries.iter().map(|&(_, _, v)| v).collect();
        Self::from_parts(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if self.get(j, i) != v {
                    return false;
                }
            }
        }
        true
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn diagonal_is_zero(&self) -> bool {
        (0..self.n_rows.min(self.n_cols)).all(|i| self.get(i, i) == 0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_triplets_builds_canonical_csr() {
        let m = SparseMatrix::from_triplets(2, 2, &[(1, 0, 3.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn duplicate_triplets_are_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0)]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn out_of_range_entries_are_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(0, 5, 1.0)]).is_err());
    }

    #[test]
    fn from_parts_validates_offsets() {
        // row_offsets[0] != 0
        assert!(SparseMatrix::from_parts(1, 1, vec![1, 1], vec![0], vec![1.0]).is_err());
        // decreasing offsets
        assert!(SparseMatrix::from_parts(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        // unsorted columns within a row
        assert!(
            SparseMatrix::from_parts(1, 3, vec![0, 2], vec![2, 0], vec![1.0, 1.0]).is_err()
        );
    }

    #[test]
    fn symmetry_check_compares_values() {
        let sym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        assert!(sym.is_symmetric());
        let asym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert!(!asym.is_symmetric());
        let missing = SparseMatrix::from_triplets(2, 2, &[(0, 1, 2.0)]).unwrap();
        assert!(!missing.is_symmetric());
    }

    #[test]
    fn identity_roundtrips_through_dense() {
        let eye = SparseMatrix::identity(3);
        let dense = eye.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}
