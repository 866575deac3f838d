use crate::error::{NaumError, Result};
use crate::linalg::DenseMatrix;

/// Lower Cholesky factor of a small symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(h: &DenseMatrix) -> Result<Self> {
        let n = h.rows();
        h.ensure_shape(n, n, "cholesky input")?;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = h.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > 0.0) {
                return Err(NaumError::InvalidData(
                    "matrix is not positive definite".into(),
                ));
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in j + 1..n {
                let mut s = h.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Ok(Cholesky { l })
    }

    /// Solves `H x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.rows();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l.get(k, i) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
    }

    /// `C H^{-1}` for symmetric `H`: each row of `C` is solved independently.
    pub fn right_solve(&self, c: &DenseMatrix) -> DenseMatrix {
        let mut out = c.clone();
        for i in 0..out.rows() {
            self.solve_in_place(out.row_mut(i));
        }
        out
    }
}
