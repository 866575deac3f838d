//! Random starting points.

use crate::harness::rng::{streams, StreamRng};
use crate::linalg::DenseMatrix;

/// Truncated standard normals, each factor scaled to `||.||_F = sqrt(||M||_F)`.
/// An all-zero draw is retried with the next seed.
pub fn init_nmf(m: usize, n: usize, r: usize, m_fro_norm: f64, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let target = m_fro_norm.sqrt();
    let draw = |rows: usize, stream: u64| {
        let mut s = seed;
        loop {
            let w = StreamRng::new(s, stream).normal_matrix(rows, r).map(|v| v.max(0.0));
            let norm = w.fro_norm();
            if norm > 0.0 {
                return w.scaled(target / norm);
            }
            s = s.wrapping_add(1);
        }
    };
    (draw(m, streams::INIT_X), draw(n, streams::INIT_Y))
}

/// Plain standard normal factors.
pub fn init_mc(m: usize, n: usize, r: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    (
        StreamRng::new(seed, streams::INIT_X).normal_matrix(m, r),
        StreamRng::new(seed, streams::INIT_Y).normal_matrix(n, r),
    )
}
