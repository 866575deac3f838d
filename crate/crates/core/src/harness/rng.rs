//! Deterministic random streams.
//!
//! Every stream is ChaCha8 keyed by the trial seed, with the 64-bit ChaCha
//! stream id selecting the purpose (initial X, initial Y, sampling mask, ...).
//! ChaCha is counter based, so streams never overlap and results do not depend
//! on the order in which streams are consumed. Normal variates come from the
//! inverse normal CDF applied to uniforms on the open unit interval.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::DenseMatrix;

/// Stream ids used by the harness.
pub mod streams {
    pub const INIT_X: u64 = 1;
    pub const INIT_Y: u64 = 2;
    pub const MASK: u64 = 3;
    pub const DATA_X: u64 = 4;
    pub const DATA_Y: u64 = 5;
    pub const NOISE: u64 = 6;
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    normal: Normal,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng {
            inner,
            normal: Normal::standard(),
        }
    }

    /// Uniform on `(0, 1)`, never returning either endpoint.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.uniform())
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}
