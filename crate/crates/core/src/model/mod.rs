//! Problem definition, regularizer oracles and algorithm constants.

mod params;
mod problem;
mod prox;

pub use params::{derive_params, ParamOverrides, Scheme, SolverParams};
pub use problem::ProblemSpec;
pub use prox::{Bound, ProxOracle};
