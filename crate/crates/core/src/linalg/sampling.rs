use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::DenseMatrix;

/// Set of observed positions of an `rows x cols` matrix, zero-based and
/// strictly sorted in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPattern {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
}

impl SamplingPattern {
    /// Sorts `entries`; duplicates and out-of-range indices are rejected.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return Err(NaumError::dims(format!(
                "index ({i}, {j}) outside a {rows}x{cols} pattern"
            )));
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(NaumError::InvalidData(format!(
                "duplicate sampled entry {:?}",
                w[0]
            )));
        }
        Ok(SamplingPattern {
            rows,
            cols,
            entries,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .collect();
        SamplingPattern {
            rows,
            cols,
            entries,
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        SamplingPattern {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.binary_search(&(i, j)).is_ok()
    }

    /// Values of `m` on the pattern, in pattern order.
    pub fn gather(&self, m: &DenseMatrix) -> Vec<f64> {
        self.entries.iter().map(|&(i, j)| m.get(i, j)).collect()
    }

    /// Dense matrix with `values` on the pattern and zeros elsewhere.
    pub fn scatter(&self, values: &[f64]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (&(i, j), &v) in self.entries.iter().zip(values) {
            out.set(i, j, v);
        }
        out
    }

    /// `P(A B^T - M)` on the pattern, computed from row slices of `a` and
    /// `b` without forming the dense product.
    pub fn residual(&self, a: &DenseMatrix, b: &DenseMatrix, observed: &[f64]) -> Vec<f64> {
        debug_assert_eq!(observed.len(), self.entries.len());
        self.entries
            .iter()
            .zip(observed)
            .map(|(&(i, j), &m)| crate::linalg::dot(a.row(i), b.row(j)) - m)
            .collect()
    }

    /// `S * B` where `S` is the sparse matrix holding `values` on the pattern.
    pub fn sparse_mul(&self, values: &[f64], b: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(b.rows(), self.cols);
        let mut out = DenseMatrix::zeros(self.rows, b.cols());
        for (&(i, j), &v) in self.entries.iter().zip(values) {
            let src = b.row(j);
            for (o, &s) in out.row_mut(i).iter_mut().zip(src) {
                *o += v * s;
            }
        }
        out
    }

    /// `S^T * A` where `S` is the sparse matrix holding `values` on the pattern.
    pub fn sparse_t_mul(&self, values: &[f64], a: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(a.rows(), self.rows);
        let mut out = DenseMatrix::zeros(self.cols, a.cols());
        for (&(i, j), &v) in self.entries.iter().zip(values) {
            let src = a.row(i);
            for (o, &s) in out.row_mut(j).iter_mut().zip(src) {
                *o += v * s;
            }
        }
        out
    }
}
