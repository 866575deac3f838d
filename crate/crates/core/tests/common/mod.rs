//! Reference implementations shared by the integration tests. Nothing here
//! calls into the solver code beyond plain matrix containers.
#![allow(dead_code)]

use nalgebra::DMatrix;
use naum::harness::rng::StreamRng;
use naum::linalg::{DenseMatrix, SamplingPattern};

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `U diag(max(s - nu, 0)) V^T` from nalgebra's SVD.
pub fn shrink_ref(x: &DenseMatrix, nu: f64) -> DenseMatrix {
    let svd = to_na(x).svd(true, true);
    let s = svd.singular_values.map(|v| (v - nu).max(0.0));
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    from_na(&(u * DMatrix::from_diagonal(&s) * vt))
}

pub fn nuclear_ref(x: &DenseMatrix) -> f64 {
    to_na(x).singular_values().sum()
}

pub fn spectral_ref(x: &DenseMatrix) -> f64 {
    to_na(x).singular_values().max()
}

pub fn product(x: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    from_na(&(to_na(x) * to_na(y).transpose()))
}

pub fn fro_sq(m: &DenseMatrix) -> f64 {
    m.data().iter().map(|v| v * v).sum()
}

pub fn diff(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) - b.get(i, j))
}

/// Planted `X Y^T` with standard normal factors, `|.|` applied when `nonneg`.
pub fn planted(m: usize, n: usize, k: usize, seed: u64, nonneg: bool) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let mut rng = StreamRng::new(seed, 900);
    let f = |v: f64| if nonneg { v.abs() } else { v };
    let x = rng.normal_matrix(m, k).map(f);
    let y = rng.normal_matrix(n, k).map(f);
    let data = product(&x, &y);
    (x, y, data)
}

/// Entries of `m` at the pattern, in pattern order.
pub fn observed(p: &SamplingPattern, m: &DenseMatrix) -> Vec<f64> {
    p.entries().iter().map(|&(i, j)| m.get(i, j)).collect()
}

/// Running maximum over the last `window + 1` values of `f`, checked to be
/// non-increasing. Returns the number of increases.
pub fn window_increases(f: &[f64], window: usize) -> usize {
    let maxes: Vec<f64> = (0..f.len())
        .map(|k| f[k.saturating_sub(window)..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    maxes.windows(2).filter(|w| w[1] > w[0]).count()
}
