//! Dense and sparse storage, linear maps with adjoints, and the spectral
//! routines the solvers need.

mod chol;
mod dense;
mod map;
mod sampling;
mod sparse;
mod svd;

pub use chol::Cholesky;
pub use dense::{dot, DenseMatrix};
pub use map::LinearMap;
pub use sampling::SamplingPattern;
pub use sparse::CsrMatrix;
pub use svd::{
    nuclear_norm, shrink_singular, shrink_singular_with_norm, singular_values, spectral_norm_sq,
    thin_svd, SvdResult,
};
