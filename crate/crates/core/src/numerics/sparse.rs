use crate::error::{Error, Result};

use super::DenseMatrix;

/// Compressed sparse row matrix. Column indices within a row are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns must be strictly
    /// increasing within each row and `< cols`.
    pub fn from_row_entries(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for (r, entries) in rows.iter().enumerate() {
            let mut prev = None;
            for &(c, v) in entries {
                if c >= cols {
                    return Err(Error::shape(
                        "csr",
                        format!("column {c} out of range in row {r} (cols = {cols})"),
                    ));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::InvalidArgument(format!(
                        "columns not strictly increasing in row {r}"
                    )));
                }
                prev = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    /// Same sparsity pattern with a new value per stored entry.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        CsrMatrix {
            values,
            ..self.clone()
        }
    }

    /// Scales every row to unit L1 norm; all-zero rows are left untouched.
    pub fn row_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let sum: f64 = values[span.clone()].iter().map(|v| v.abs()).sum();
            if sum > 0.0 {
                values[span].iter_mut().for_each(|v| *v /= sum);
            }
        }
        self.with_values(values)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// Sparse-dense product `self * b`; cost is `nnz * b.cols()`.
    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows() {
            return Err(Error::shape(
                "spmm",
                format!("{}x{} x {:?}", self.rows, self.cols, b.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols());
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let out_row = out.row_mut(r);
            for (&c, &v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
                for (o, x) in out_row.iter_mut().zip(b.row(c)) {
                    *o += v * x;
                }
            }
        }
        out.debug_check_finite("spmm");
        Ok(out)
    }

    /// Transposed product `self^T * b` without materializing the transpose.
    pub fn t_spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != b.rows() {
            return Err(Error::shape(
                "t_spmm",
                format!("({}x{})^T x {:?}", self.rows, self.cols, b.shape()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.cols, b.cols());
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let b_row = b.row(r);
            for (&c, &v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
                for (o, x) in out.row_mut(c).iter_mut().zip(b_row) {
                    *o += v * x;
                }
            }
        }
        out.debug_check_finite("t_spmm");
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_pattern_is_neutral() {
        let b = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![4.0, 0.0]]);
        assert_eq!(CsrMatrix::identity(3).spmm(&b).unwrap(), b);
    }

    #[test]
    fn two_node_normalized_adjacency_product() {
        let a = CsrMatrix::from_row_entries(2, &[vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]])
            .unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![3.0]]);
        let out = a.spmm(&b).unwrap();
        assert_eq!(out, DenseMatrix::from_rows(&[vec![2.0], vec![2.0]]));
    }

    #[test]
    fn mismatched_dims_error() {
        let a = CsrMatrix::identity(3);
        assert!(a.spmm(&DenseMatrix::zeros(2, 1)).is_err());
        assert!(a.t_spmm(&DenseMatrix::zeros(4, 1)).is_err());
    }

    #[test]
    fn rejects_unsorted_columns() {
        assert!(CsrMatrix::from_row_entries(3, &[vec![(2, 1.0), (1, 1.0)]]).is_err());
        assert!(CsrMatrix::from_row_entries(3, &[vec![(3, 1.0)]]).is_err());
    }

    fn random_sparse() -> impl Strategy<Value = (CsrMatrix, DenseMatrix)> {
        (
            proptest::collection::vec(proptest::option::weighted(0.3, -5.0f64..5.0), 400),
            proptest::collection::vec(-5.0f64..5.0, 20 * 3),
        )
            .prop_map(|(cells, dense)| {
                let rows: Vec<Vec<(usize, f64)>> = cells
                    .chunks(20)
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter_map(|(c, v)| v.map(|v| (c, v)))
                            .collect()
                    })
                    .collect();
                (
                    CsrMatrix::from_row_entries(20, &rows).unwrap(),
                    DenseMatrix::from_vec(20, 3, dense).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn spmm_matches_dense_reference((a, b) in random_sparse()) {
            let dense = a.to_dense();
            let want = dense.matmul(&b).unwrap();
            prop_assert!(a.spmm(&b).unwrap().max_abs_diff(&want) < 1e-12);
            let want_t = dense.t_matmul(&b).unwrap();
            prop_assert!(a.t_spmm(&b).unwrap().max_abs_diff(&want_t) < 1e-12);
        }
    }
}
