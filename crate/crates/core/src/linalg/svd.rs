//! Thin SVD, singular value shrinkage and spectral norm estimation.
//!
//! The SVD diagonalizes `X^T X` with cyclic Jacobi rotations applied one-sidedly
//! to the columns of `X` (Hestenes' method). The Gram matrix is never formed, so
//! small singular values keep full relative accuracy and `U` stays orthonormal.

use crate::error::{NaumError, Result};
use crate::linalg::{dot, DenseMatrix};

const MAX_SWEEPS: usize = 50;
/// Pairs are rotated while `|a_p . a_q| > tol * ||a_p|| ||a_q||`.
const ORTHO_TOL: f64 = 1e-15;
/// Singular values below `RANK_TOL * s_1` get arbitrary orthonormal `U` columns.
const RANK_TOL: f64 = 1e-12;

const POWER_MAX_ITERS: usize = 500;
const POWER_REL_TOL: f64 = 1e-10;

/// `X = U diag(s) V^T` with `t = min(m, n)` components, `s` descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.s)
    }

    fn reconstruct_with(&self, s: &[f64]) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(m, n);
        for (k, &sk) in s.iter().enumerate() {
            if sk == 0.0 {
                continue;
            }
            for i in 0..m {
                let uik = self.u.get(i, k) * sk;
                if uik == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += uik * self.v.get(j, k);
                }
            }
        }
        out
    }
}

pub fn thin_svd(x: &DenseMatrix) -> Result<SvdResult> {
    if !x.is_finite() {
        return Err(NaumError::NonFiniteInput("thin_svd input".into()));
    }
    if x.rows() >= x.cols() {
        Ok(tall_svd(x))
    } else {
        let t = tall_svd(&x.transpose());
        Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn tall_svd(x: &DenseMatrix) -> SvdResult {
    let (m, n) = x.shape();
    // column-major working copies
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let s1 = s.first().copied().unwrap_or(0.0);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        let sk = norms[k];
        if s1 > 0.0 && sk > RANK_TOL * s1 {
            u_cols.push(a[k].iter().map(|&e| e / sk).collect());
        } else {
            u_cols.push(vec![0.0; m]);
            deficient.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient, m);

    let mut s = s;
    for &slot in &deficient {
        s[slot] = 0.0;
    }
    let u = DenseMatrix::from_fn(m, n, |i, j| u_cols[j][i]);
    let v = DenseMatrix::from_fn(n, n, |i, j| v[order[j]][i]);
    SvdResult { u, s, v }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the `slots` columns with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<f64>], slots: &[usize], m: usize) {
    let mut candidate = 0usize;
    for &slot in slots {
        loop {
            assert!(candidate < m, "orthonormal completion ran out of basis vectors");
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for (k, col) in cols.iter().enumerate() {
                    if k == slot || col.iter().all(|&e| e == 0.0) {
                        continue;
                    }
                    let proj = dot(col, &w);
                    for (wi, &ci) in w.iter_mut().zip(col) {
                        *wi -= proj * ci;
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 1e-8 {
                cols[slot] = w.into_iter().map(|e| e / norm).collect();
                break;
            }
        }
    }
}

pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(thin_svd(x)?.s)
}

pub fn nuclear_norm(x: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(x)?.iter().sum())
}

/// Matrix shrinkage operator `S_nu(X) = U diag(max(s - nu, 0)) V^T`.
pub fn shrink_singular(x: &DenseMatrix, nu: f64) -> Result<DenseMatrix> {
    Ok(shrink_singular_with_norm(x, nu)?.0)
}

/// Shrinkage together with the nuclear norm of the result, which falls out of
/// the same decomposition.
pub fn shrink_singular_with_norm(x: &DenseMatrix, nu: f64) -> Result<(DenseMatrix, f64)> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(NaumError::param(format!(
            "shrinkage threshold must be finite and >= 0, got {nu}"
        )));
    }
    let svd = thin_svd(x)?;
    if nu == 0.0 {
        return Ok((x.clone(), svd.s.iter().sum()));
    }
    let shrunk: Vec<f64> = svd.s.iter().map(|&s| (s - nu).max(0.0)).collect();
    let norm = shrunk.iter().sum();
    Ok((svd.reconstruct_with(&shrunk), norm))
}

/// Largest squared singular value by power iteration on `X^T X` (or `X X^T`,
/// whichever is smaller), started from the normalized all-ones vector.
/// Falls back to a full SVD when the iteration does not settle.
pub fn spectral_norm_sq(x: &DenseMatrix) -> f64 {
    if x.data().iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let work = if x.rows() < x.cols() {
        x.transpose()
    } else {
        x.clone()
    };
    let n = work.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        let xv: Vec<f64> = (0..work.rows()).map(|i| dot(work.row(i), &v)).collect();
        let mut w = vec![0.0; n];
        for (i, &s) in xv.iter().enumerate() {
            for (wj, &xij) in w.iter_mut().zip(work.row(i)) {
                *wj += s * xij;
            }
        }
        let rayleigh = dot(&v, &w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            break;
        }
        if (rayleigh - prev).abs() < POWER_REL_TOL * rayleigh {
            return rayleigh;
        }
        prev = rayleigh;
        v = w.into_iter().map(|e| e / norm).collect();
    }
    let s1 = thin_svd(x).map(|s| s.s[0]).unwrap_or(f64::NAN);
    s1 * s1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        DenseMatrix::from_fn(m, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn check_svd(x: &DenseMatrix) {
        let svd = thin_svd(x).unwrap();
        let t = x.rows().min(x.cols());
        assert_eq!(svd.s.len(), t);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let err = svd.reconstruct().dist(x);
        assert!(err <= 1e-10 * (1.0 + x.fro_norm()), "reconstruction {err}");
        let utu = svd.u.gram();
        let vtv = svd.v.gram();
        assert!(utu.max_abs_diff(&DenseMatrix::identity(t)) <= 1e-10);
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(t)) <= 1e-10);
    }

    #[test]
    fn diagonal_input() {
        let svd = thin_svd(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(svd.s, vec![3.0, 1.0]);
        assert_eq!(svd.u.map(f64::abs), DenseMatrix::identity(2));
        assert_eq!(svd.v.map(f64::abs), DenseMatrix::identity(2));
    }

    #[test]
    fn zero_matrix_has_zero_singular_values() {
        let x = DenseMatrix::zeros(3, 2);
        let svd = thin_svd(&x).unwrap();
        assert_eq!(svd.s, vec![0.0, 0.0]);
        check_svd(&x);
    }

    #[test]
    fn random_shapes() {
        for (seed, (m, n)) in [(5, 3), (3, 5), (1, 4), (4, 1), (12, 12), (64, 32)]
            .into_iter()
            .enumerate()
        {
            check_svd(&pseudo_random(m, n, seed as u64));
        }
    }

    #[test]
    fn rank_deficient_completion() {
        let u = DenseMatrix::column_vector(&[1.0, 2.0, 0.0, -1.0]);
        let v = DenseMatrix::column_vector(&[2.0, 1.0, 1.0]);
        let x = u.matmul_t(&v).unwrap();
        check_svd(&x);
        let svd = thin_svd(&x).unwrap();
        assert_eq!(svd.s[1], 0.0);
        assert_eq!(svd.s[2], 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        // DenseMatrix::new refuses NaN, so poke one in through the mutable view
        let mut x = DenseMatrix::zeros(2, 2);
        x.data_mut()[1] = f64::INFINITY;
        assert!(matches!(thin_svd(&x), Err(NaumError::NonFiniteInput(_))));
    }

    #[test]
    fn shrinkage_examples() {
        let d = DenseMatrix::from_diag(&[3.0, 1.0]);
        let w = shrink_singular(&d, 2.0).unwrap();
        assert!(w.max_abs_diff(&DenseMatrix::from_diag(&[1.0, 0.0])) < 1e-14);
        let x = pseudo_random(4, 3, 9);
        assert_eq!(shrink_singular(&x, 0.0).unwrap(), x);
        let off = DenseMatrix::from_rows(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let w = shrink_singular(&off, 1.0).unwrap();
        assert!(w.max_abs_diff(&DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])) < 1e-14);
        assert!(matches!(
            shrink_singular(&x, -1.0),
            Err(NaumError::InvalidParameter(_))
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm_sq(&DenseMatrix::zeros(3, 2)), 0.0);
        assert!((spectral_norm_sq(&DenseMatrix::from_diag(&[3.0, 1.0])) - 9.0).abs() < 1e-9);
        // u = (0, 2, 0), v = (1, 2, 2): ||u|| = 2, ||v|| = 3
        let u = DenseMatrix::column_vector(&[0.0, 2.0, 0.0]);
        let v = DenseMatrix::column_vector(&[1.0, 2.0, 2.0]);
        let x = u.matmul_t(&v).unwrap();
        assert!((spectral_norm_sq(&x) - 36.0).abs() < 36.0 * 1e-8);
        let r = pseudo_random(6, 4, 3);
        let s1 = thin_svd(&r).unwrap().s[0];
        assert!((spectral_norm_sq(&r) - s1 * s1).abs() <= 1e-8 * s1 * s1);
    }
}
