//! Non-monotone alternating updating (NAUM) solvers for factorization models
//! `Psi(X) + Phi(Y) + 1/2 ||A(X Y^T) - b||^2`, with specializations for
//! box-constrained NMF and nuclear-norm matrix completion, the HALS and PALM
//! baselines, and a trial harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod engine;
pub mod harness;
pub mod mc;
pub mod nmf;
pub mod par;
pub mod verify;

pub use error::{NaumError, Result};
