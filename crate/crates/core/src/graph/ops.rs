//! Graph operators: self-loop insertion, symmetric normalization, and the
//! smoothing products built from them.

use crate::error::{Error, Result};
use crate::graph::{DenseMatrix, SparseMatrix};

/// Add one to every diagonal entry of a square symmetric matrix.
pub fn add_self_loops(a: &SparseMatrix) -> Result<SparseMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "self loops need a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::Validation("adjacency must be symmetric".into()));
    }
    let n = a.n_rows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    row_offsets.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut inserted = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                col_indices.push(j);
                values.push(v + 1.0);
                inserted = true;
            } else {
                if !inserted && j > i {
                    col_indices.push(i);
                    values.push(1.0);
                    inserted = true;
                }
                col_indices.push(j);
                values.push(v);
            }
        }
        if !inserted {
            col_indices.push(i);
            values.push(1.0);
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_parts(n, n, row_offsets, col_indices, values)
}

/// Symmetric normalization: entry (i, j) becomes `a_ij / (sqrt(d_i) sqrt(d_j))`
/// where `d` are the row sums. The sparsity pattern is unchanged and the
/// result is exactly symmetric because (i, j) and (j, i) are computed from
/// the same commutative product.
pub fn sym_normalize(a_tilde: &SparseMatrix) -> Result<SparseMatrix> {
    if !a_tilde.is_square() {
        return Err(Error::Dimension(format!(
            "normalization needs a square matrix, got {}x{}",
            a_tilde.n_rows(),
            a_tilde.n_cols()
        )));
    }
    if !a_tilde.is_symmetric() {
        return Err(Error::Validation("matrix must be symmetric".into()));
    }
    let degrees = a_tilde.row_sums();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::DegenerateGraph(format!(
            "row {} has non-positive degree {}",
            i, degrees[i]
        )));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let n = a_tilde.n_rows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(a_tilde.nnz());
    let mut values = Vec::with_capacity(a_tilde.nnz());
    row_offsets.push(0);
    for i in 0..n {
        let (cols, vals) = a_tilde.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            col_indices.push(j);
            values.push(v * (inv_sqrt[i] * inv_sqrt[j]));
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_parts(n, n, row_offsets, col_indices, values)
}

/// Sparse-dense product `S * D`. Within each output row the contributions
/// accumulate in ascending column order, so results are bitwise reproducible.
pub fn spmm(s: &SparseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    if s.n_cols() != d.n_rows() {
        return Err(Error::Dimension(format!(
            "spmm: {}x{} * {}x{}",
            s.n_rows(),
            s.n_cols(),
            d.n_rows(),
            d.n_cols()
        )));
    }
    let mut out = DenseMatrix::zeros(s.n_rows(), d.n_cols());
    for i in 0..s.n_rows() {
        let (cols, vals) = s.row(i);
        let out_row = out.row_mut(i);
        for (&k, &v) in cols.iter().zip(vals) {
            let d_row = d.row(k);
            for (o, &x) in out_row.iter_mut().zip(d_row) {
                *o += v * x;
            }
        }
    }
    Ok(out)
}

/// Apply the smoothing operator `times` times: returns `A_hat^times * X`.
pub fn smooth(x: &DenseMatrix, a_hat: &SparseMatrix, times: usize) -> Result<DenseMatrix> {
    if a_hat.n_cols() != x.n_rows() {
        return Err(Error::Dimension(format!(
            "smooth: operator is {}x{}, features have {} rows",
            a_hat.n_rows(),
            a_hat.n_cols(),
            x.n_rows()
        )));
    }
    let mut current = x.clone();
    for _ in 0..times {
        current = spmm(a_hat, &current)?;
    }
    Ok(current)
}

/// Divide each row by its L1 norm; all-zero rows pass through unchanged.
pub fn row_normalize(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> SparseMatrix {
        let mut triplets = Vec::new();
        for i in 0..n - 1 {
            triplets.push((i, i + 1, 1.0));
            triplets.push((i + 1, i, 1.0));
        }
        SparseMatrix::from_triplets(n, n, &triplets).unwrap()
    }

    #[test]
    fn self_loops_on_empty_graph() {
        let a = SparseMatrix::from_triplets(1, 1, &[]).unwrap();
        let a_tilde = add_self_loops(&a).unwrap();
        assert_eq!(a_tilde.get(0, 0), 1.0);
        assert_eq!(a_tilde.nnz(), 1);
    }

    #[test]
    fn self_loops_on_two_node_clique() {
        let a =
            SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let a_tilde = add_self_loops(&a).unwrap();
        assert_eq!(a_tilde.to_dense().values(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn self_loops_on_path_leave_off_diagonals_alone() {
        let a = path_graph(3);
        let a_tilde = add_self_loops(&a).unwrap();
        for i in 0..3 {
            assert_eq!(a_tilde.get(i, i), 1.0);
        }
        assert_eq!(a_tilde.get(0, 1), 1.0);
        assert_eq!(a_tilde.get(1, 2), 1.0);
        assert_eq!(a_tilde.get(0, 2), 0.0);
        assert_eq!(a_tilde.nnz(), a.nnz() + 3);
    }

    #[test]
    fn self_loops_increment_existing_diagonal() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0)]).unwrap();
        let a_tilde = add_self_loops(&a).unwrap();
        assert_eq!(a_tilde.get(0, 0), 3.0);
        assert_eq!(a_tilde.get(1, 1), 1.0);
    }

    #[test]
    fn self_loops_reject_non_square_and_asymmetric() {
        let rect = SparseMatrix::from_triplets(2, 3, &[]).unwrap();
        assert!(matches!(add_self_loops(&rect), Err(Error::Dimension(_))));
        let asym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(add_self_loops(&asym), Err(Error::Validation(_))));
    }

    #[test]
    fn normalize_single_self_loop_is_identity() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
        let a_hat = sym_normalize(&a).unwrap();
        assert_eq!(a_hat.get(0, 0), 1.0);
    }

    #[test]
    fn normalize_two_node_clique_with_loops() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
        )
        .unwrap();
        let a_hat = sym_normalize(&a).unwrap();
        assert_eq!(a_hat.to_dense().values(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalize_star_matches_hand_computation() {
        // Star on 3 nodes (center 0) plus self loops: center degree 3, leaves 2.
        let star = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 1, 1.0), (1, 0, 1.0), (0, 2, 1.0), (2, 0, 1.0)],
        )
        .unwrap();
        let a_hat = sym_normalize(&add_self_loops(&star).unwrap()).unwrap();
        let expected = 1.0 / 6.0_f64.sqrt();
        assert!((a_hat.get(0, 1) - expected).abs() < 1e-15);
        assert!((a_hat.get(2, 0) - expected).abs() < 1e-15);
        assert!((expected - 0.40825).abs() < 1e-5);
        assert!((a_hat.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((a_hat.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero_degree_row() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(sym_normalize(&a), Err(Error::DegenerateGraph(_))));
    }

    #[test]
    fn normalized_output_is_exactly_symmetric() {
        let a_hat = sym_normalize(&add_self_loops(&path_graph(5)).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a_hat.get(i, j), a_hat.get(j, i));
            }
        }
    }

    #[test]
    fn spmm_identity_is_a_no_op() {
        let d = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = spmm(&SparseMatrix::identity(2), &d).unwrap();
        assert_eq!(out.values(), d.values());
    }

    #[test]
    fn spmm_matches_hand_multiply() {
        let s = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)],
        )
        .unwrap();
        let d = DenseMatrix::from_rows(&[vec![2.0], vec![4.0]]).unwrap();
        let out = spmm(&s, &d).unwrap();
        assert_eq!(out.values(), &[3.0, 3.0]);
    }

    #[test]
    fn spmm_zero_matrix_gives_zeros() {
        let s = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        let d = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let out = spmm(&s, &d).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spmm_rejects_dimension_mismatch() {
        let s = SparseMatrix::identity(2);
        let d = DenseMatrix::zeros(3, 1);
        assert!(matches!(spmm(&s, &d), Err(Error::Dimension(_))));
    }

    #[test]
    fn smooth_zero_times_is_identity() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-2.0]]).unwrap();
        let out = smooth(&x, &SparseMatrix::identity(2), 0).unwrap();
        assert_eq!(out.values(), x.values());
    }

    #[test]
    fn smooth_once_on_clique() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let a_hat = sym_normalize(&add_self_loops(&a).unwrap()).unwrap();
        let x = DenseMatrix::from_rows(&[vec![2.0], vec![4.0]]).unwrap();
        let out = smooth(&x, &a_hat, 1).unwrap();
        assert_eq!(out.values(), &[3.0, 3.0]);
    }

    #[test]
    fn row_normalize_examples() {
        let x = DenseMatrix::from_rows(&[vec![2.0, 2.0]]).unwrap();
        assert_eq!(row_normalize(&x).values(), &[0.5, 0.5]);
        let zero = DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(row_normalize(&zero).values(), &[0.0, 0.0]);
        let one = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(row_normalize(&one).values(), &[1.0]);
    }
}
