//! Trial orchestration: data generation, shared initializations, metrics,
//! evolution curves and report files.

pub mod curve;
pub mod init;
pub mod io;
pub mod rng;
pub mod trials;

pub use curve::{default_grid, evolution_curve, group_min, normalized_values, trace_curve, EvolutionCurve};
pub use init::{init_mc, init_nmf};
pub use io::{load_matrix, write_matrix, LoadedMatrix, MatrixFormat};
pub use trials::{
    aggregate, run_trials, run_trials_with, AlgorithmConfig, DataSource, ProblemConfig, Report, StopMode, TrialConfig,
    TrialRecord,
};
