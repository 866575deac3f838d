use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::DenseMatrix;

/// Compressed sparse row storage, used for large sparse data matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from zero-based `(row, col, value)` triples; duplicates are an error.
    pub fn from_triples(rows: usize, cols: usize, mut triples: Vec<(usize, usize, f64)>) -> Result<Self> {
        triples.sort_unstable_by_key(|t| (t.0, t.1));
        for w in triples.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(NaumError::InvalidData(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        for &(i, j, v) in &triples {
            if i >= rows || j >= cols {
                return Err(NaumError::dims(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(NaumError::NonFiniteInput(format!("entry ({i}, {j})")));
            }
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let triples = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = m.get(i, j);
                (v != 0.0).then_some((i, j, v))
            })
            .collect();
        Self::from_triples(m.rows(), m.cols(), triples).expect("dense input is valid")
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

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |k| (i, self.indices[k], self.values[k]))
        })
    }

    pub fn fro_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triples() {
            out.set(i, j, v);
        }
        out
    }

    /// `self * b`.
    pub fn mul_dense(&self, b: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(b.rows(), self.cols);
        let mut out = DenseMatrix::zeros(self.rows, b.cols());
        for i in 0..self.rows {
            let out_row = out.row_mut(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.values[k];
                for (o, &s) in out_row.iter_mut().zip(b.row(self.indices[k])) {
                    *o += v * s;
                }
            }
        }
        out
    }

    /// `self^T * a`.
    pub fn t_mul_dense(&self, a: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(a.rows(), self.rows);
        let mut out = DenseMatrix::zeros(self.cols, a.cols());
        for i in 0..self.rows {
            let src = a.row(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.values[k];
                for (o, &s) in out.row_mut(self.indices[k]).iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        out
    }
}
