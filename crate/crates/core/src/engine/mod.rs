//! The generic NAUM iteration: Z-update, block updates under the three
//! schemes, the non-monotone line search and the outer loop.

mod kernel;
mod naum;
mod trace;
mod updates;

pub use kernel::{CandidateEval, DenseKernel, NaumKernel};
pub use naum::{
    line_search, solve, solve_with_kernel, IterateState, LineSearchOutcome, Solution,
    StopOptions, DESCENT_SLACK,
};
pub(crate) use naum::StopRules;
pub use trace::{Diagnostics, IterationRecord, Termination, Trace};
pub use updates::{block_optimality_residual, block_update, check_scheme, update_x, update_y};
