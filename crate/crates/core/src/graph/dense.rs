//! Row-major dense matrix with 64-bit entries.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, values: vec![0.0; n_rows * n_cols] }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "expected {}x{} = {} values, got {}",
                n_rows,
                n_cols,
                n_rows * n_cols,
                values.len()
            )));
        }
        Ok(Self { n_rows, n_cols, values })
    }

    /// Build from row slices; every row must have the same width.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n_cols
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { n_rows, n_cols, values })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self * other`. Accumulation over the inner index runs in ascending
    /// order, so the result is bitwise reproducible; zero entries of `self`
    /// are skipped, which makes sparse feature matrices cheap to multiply.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} * {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            let a_row = self.row(i);
            let out_row = &mut out.values[i * other.n_cols..(i + 1) * other.n_cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.values[k * other.n_cols..(k + 1) * other.n_cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn matmul_at_b(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_rows != other.n_rows {
            return Err(Error::Dimension(format!(
                "matmul_at_b: ({}x{})ᵀ * {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_cols, other.n_cols);
        for i in 0..self.n_rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.values[k * other.n_cols..(k + 1) * other.n_cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * otherᵀ` without materializing the transpose.
    pub fn matmul_a_bt(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_cols {
            return Err(Error::Dimension(format!(
                "matmul_a_bt: {}x{} * ({}x{})ᵀ",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_rows);
        for i in 0..self.n_rows {
            let a_row = self.row(i);
            for j in 0..other.n_rows {
                let b_row = other.row(j);
                let mut acc = 0.0;
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc += a * b;
                }
                out.values[i * other.n_rows + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
