use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::{DenseMatrix, SamplingPattern};

/// Linear map from `R^{m x n}` to `R^q` satisfying `A A^* = I_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinearMap {
    /// Row-major flattening, `q = m n`.
    Identity { rows: usize, cols: usize },
    /// Entries on the pattern in pattern order, `q = |pattern|`.
    Sampling(SamplingPattern),
}

impl LinearMap {
    pub fn identity(rows: usize, cols: usize) -> Self {
        LinearMap::Identity { rows, cols }
    }

    pub fn input_shape(&self) -> (usize, usize) {
        match self {
            LinearMap::Identity { rows, cols } => (*rows, *cols),
            LinearMap::Sampling(p) => (p.rows(), p.cols()),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            LinearMap::Identity { rows, cols } => rows * cols,
            LinearMap::Sampling(p) => p.len(),
        }
    }

    pub fn apply(&self, m: &DenseMatrix) -> Result<Vec<f64>> {
        let (rows, cols) = self.input_shape();
        m.ensure_shape(rows, cols, "linear map input")?;
        Ok(match self {
            LinearMap::Identity { .. } => m.data().to_vec(),
            LinearMap::Sampling(p) => p.gather(m),
        })
    }

    pub fn adjoint(&self, v: &[f64]) -> Result<DenseMatrix> {
        if v.len() != self.output_dim() {
            return Err(NaumError::dims(format!(
                "adjoint expects a vector of length {}, got {}",
                self.output_dim(),
                v.len()
            )));
        }
        Ok(match self {
            LinearMap::Identity { rows, cols } => {
                DenseMatrix::new(*rows, *cols, v.to_vec())?
            }
            LinearMap::Sampling(p) => p.scatter(v),
        })
    }

    /// `A^* A (M)`: the orthogonal projection onto the observed coordinates.
    pub fn project(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.adjoint(&self.apply(m)?)
    }
}
