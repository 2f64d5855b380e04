//! Real symmetric matrices stored as their upper triangle.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A real symmetric matrix whose upper triangle (diagonal included) is kept
/// in compressed-sparse-column form. The diagonal is also cached densely so
/// that the product
///
/// ```text
/// A x = U x + (x^T U)^T - D x
/// ```
///
/// (`U` the stored triangle, `D` the diagonal) can be evaluated in one pass
/// over the stored entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSparseMatrix {
    order: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Validates raw CSC arrays. Row indices must be strictly increasing
    /// within each column and never exceed the column index.
    pub fn from_csc(
        order: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |why: &str| Err(Error::InvalidInput(format!("malformed CSC triangle: {why}")));
        if col_ptr.len() != order + 1 || col_ptr[0] != 0 {
            return bad("column pointer length");
        }
        if row_idx.len() != values.len() || *col_ptr.last().unwrap() != row_idx.len() {
            return bad("entry count");
        }
        let mut diag = vec![0.0; order];
        for col in 0..order {
            let (lo, hi) = (col_ptr[col], col_ptr[col + 1]);
            if lo > hi {
                return bad("column pointers decrease");
            }
            let mut prev: Option<usize> = None;
            for p in lo..hi {
                let row = row_idx[p];
                if row > col {
                    return bad("entry below the diagonal");
                }
                if prev.is_some_and(|r| r >= row) {
                    return bad("rows not strictly increasing");
                }
                prev = Some(row);
                if row == col {
                    diag[col] = values[p];
                }
            }
        }
        Ok(Self { order, col_ptr, row_idx, values, diag })
    }

    /// Builds from `(row, col, value)` entries of the upper triangle in any
    /// order. Duplicates are summed; entries with `|value| < drop_below` are
    /// discarded.
    pub fn from_upper_triplets(
        order: usize,
        mut entries: Vec<(usize, usize, f64)>,
        drop_below: f64,
    ) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r > c || c >= order {
                return Err(Error::InvalidInput(format!(
                    "entry ({r}, {c}) is not in the upper triangle of order {order}"
                )));
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; order + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut cols = Vec::with_capacity(entries.len());
        let mut it = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                it.next();
            }
            if v.abs() >= drop_below && v != 0.0 {
                row_idx.push(r);
                values.push(v);
                cols.push(c);
            }
        }
        for &c in &cols {
            col_ptr[c + 1] += 1;
        }
        for c in 0..order {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self::from_csc(order, col_ptr, row_idx, values)
    }

    pub fn from_dense(a: &DMatrix<f64>, drop_below: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        let n = a.nrows();
        let mut entries = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                entries.push((r, c, a[(r, c)]));
            }
        }
        Self::from_upper_triplets(n, entries, drop_below)
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            col_ptr: vec![0; order + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
            diag: vec![0.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored entries of the upper triangle.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Stored `(row, col, value)` triples, column by column.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.order).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |p| (self.row_idx[p], c, self.values[p]))
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.order];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`, overwriting `y`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.order {
            return Err(Error::DimensionMismatch { expected: self.order, found: x.len() });
        }
        if y.len() != self.order {
            return Err(Error::DimensionMismatch { expected: self.order, found: y.len() });
        }
        y.fill(0.0);
        self.accumulate(1.0, x, y);
        Ok(())
    }

    /// `y += alpha A x`. Lengths are the caller's responsibility.
    pub(crate) fn accumulate(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for col in 0..self.order {
            let xc = x[col];
            let mut dot = 0.0;
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                let row = self.row_idx[p];
                let v = self.values[p];
                // upper part times x, and its transpose
                y[row] += alpha * v * xc;
                dot += v * x[row];
            }
            y[col] += alpha * (dot - self.diag[col] * xc);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.order, self.order);
        for (r, c, v) in self.upper_entries() {
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
    }

    #[test]
    fn diagonal_is_elementwise() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 3.0]));
        let s = SymmetricSparseMatrix::from_dense(&a, 0.0).unwrap();
        assert_eq!(s.matvec(&[1.0, 1.0, 2.0]).unwrap(), vec![1.0, -2.0, 6.0]);
    }

    #[test]
    fn zero_matrix() {
        let s = SymmetricSparseMatrix::zeros(4);
        assert_eq!(s.matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 4]);
        assert_eq!(s.nnz(), 0);
    }

    #[test]
    fn random_sparse_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100;
        let mut a = DMatrix::zeros(n, n);
        for _ in 0..600 {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let v: f64 = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        let s = SymmetricSparseMatrix::from_dense(&a, 1e-300).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = s.matvec(&x).unwrap();
        for (u, v) in y.iter().zip(dense_mul(&a, &x)) {
            assert!((u - v).abs() < 1e-12);
        }
        assert_eq!(s.to_dense(), a);
    }

    #[test]
    fn dimension_mismatch() {
        let s = SymmetricSparseMatrix::zeros(3);
        assert!(matches!(s.matvec(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_small() {
        let s = SymmetricSparseMatrix::from_upper_triplets(
            3,
            vec![(0, 2, 1.0), (0, 2, 0.5), (1, 1, 1e-15), (0, 0, 2.0)],
            1e-12,
        )
        .unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense()[(2, 0)], 1.5);
        assert_eq!(s.diagonal(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_lower_triangle() {
        assert!(SymmetricSparseMatrix::from_upper_triplets(3, vec![(2, 0, 1.0)], 0.0).is_err());
        assert!(SymmetricSparseMatrix::from_csc(2, vec![0, 1, 1], vec![1], vec![1.0]).is_err());
    }
}
