//! Config-driven trials. Every seed gets one problem instance and one
//! starting point shared by all configured algorithms; trials run through
//! [`Execution`] and the report is assembled afterwards from the records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::engine::{StopOptions, Trace};
use crate::error::{NaumError, Result};
use crate::harness::curve::{default_grid, trace_curve, EvolutionCurve};
use crate::harness::init::{init_mc, init_nmf};
use crate::harness::io::{load_matrix, LoadedMatrix, MatrixFormat};
use crate::harness::rng::{streams, StreamRng};
use crate::linalg::DenseMatrix;
use crate::mc::{self, recovery_error, sample_mask, McProblem};
use crate::model::{derive_params, ParamOverrides, Scheme, SolverParams};
use crate::nmf::{self, NmfData, NmfProblem};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AlgorithmConfig {
    Naum {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scheme_x: Option<Scheme>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scheme_y: Option<Scheme>,
    },
    Hals,
    Palm,
}

impl AlgorithmConfig {
    pub fn naum(alpha: f64) -> Self {
        AlgorithmConfig::Naum {
            alpha,
            scheme_x: None,
            scheme_y: None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AlgorithmConfig::Naum {
                alpha,
                scheme_x,
                scheme_y,
            } => {
                let mut s = format!("naum(alpha={alpha}");
                if let Some(sx) = scheme_x {
                    s.push_str(&format!(",x={sx}"));
                }
                if let Some(sy) = scheme_y {
                    s.push_str(&format!(",y={sy}"));
                }
                s.push(')');
                s
            }
            AlgorithmConfig::Hals => "hals".into(),
            AlgorithmConfig::Palm => "palm".into(),
        }
    }

    /// NAUM parameters, with prox-linear as the default scheme for completion.
    fn params(&self, completion: bool) -> Result<Option<SolverParams>> {
        let AlgorithmConfig::Naum {
            alpha,
            scheme_x,
            scheme_y,
        } = self
        else {
            return Ok(None);
        };
        let default = if completion {
            Scheme::ProxLinear
        } else {
            Scheme::HierarchicalProx
        };
        let overrides = ParamOverrides {
            scheme_x: Some(scheme_x.unwrap_or(default)),
            scheme_y: Some(scheme_y.unwrap_or(default)),
            ..Default::default()
        };
        derive_params(*alpha, &overrides).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DataSource {
    /// `M = X Y^T` with planted factors, plus Gaussian noise scaled to
    /// `noise * ||X Y^T||_F`. NMF factors are `|N(0,1)|` and the noisy data is
    /// clipped at zero; completion factors are plain normals. Without a
    /// `data_seed` each trial seed draws its own instance.
    Synthetic {
        m: usize,
        n: usize,
        planted_rank: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_seed: Option<u64>,
    },
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<MatrixFormat>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Nmf {
        source: DataSource,
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y_max: Option<f64>,
    },
    Mc {
        source: DataSource,
        rank: usize,
        eta: f64,
        /// Read `eta` as a multiple of `||P_Omega(M)||_F`.
        #[serde(default)]
        eta_relative: bool,
        sr: f64,
    },
}

impl ProblemConfig {
    fn source(&self) -> &DataSource {
        match self {
            ProblemConfig::Nmf { source, .. } | ProblemConfig::Mc { source, .. } => source,
        }
    }

    fn is_completion(&self) -> bool {
        matches!(self, ProblemConfig::Mc { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopMode {
    /// Both relative-change rules plus the caps.
    #[default]
    Stopping,
    /// Only `max_time` and `max_iters`, for like-for-like curve comparisons.
    Budget,
}

fn default_max_iters() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-4
}

fn default_consecutive() -> usize {
    3
}

fn default_grid_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub problem: ProblemConfig,
    pub algorithms: Vec<AlgorithmConfig>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol_obj: f64,
    #[serde(default = "default_tol")]
    pub tol_change: f64,
    #[serde(default = "default_consecutive")]
    pub consecutive: usize,
    #[serde(default)]
    pub mode: StopMode,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl TrialConfig {
    pub fn new(problem: ProblemConfig, algorithms: Vec<AlgorithmConfig>, seeds: Vec<u64>) -> Self {
        TrialConfig {
            problem,
            algorithms,
            seeds,
            max_time: None,
            max_iters: default_max_iters(),
            tol_obj: default_tol(),
            tol_change: default_tol(),
            consecutive: default_consecutive(),
            mode: StopMode::Stopping,
            grid_points: default_grid_points(),
            output: None,
            jobs: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: TrialConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| NaumError::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NaumError::InvalidConfig(msg));
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.tol_obj > 0.0 && self.tol_change > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let Some(t) = self.max_time {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("max_time must be positive, got {t}"));
            }
        }
        let completion = self.problem.is_completion();
        for alg in &self.algorithms {
            match (alg, completion) {
                (AlgorithmConfig::Hals, true) => return bad("HALS applies to NMF only".into()),
                (AlgorithmConfig::Palm, false) => return bad("PALM applies to completion only".into()),
                _ => {}
            }
            alg.params(completion)
                .map_err(|e| NaumError::InvalidConfig(format!("{}: {e}", alg.label())))?;
        }
        if let ProblemConfig::Mc { sr, eta, .. } = &self.problem {
            if !(*sr > 0.0 && *sr <= 1.0) || !(*eta > 0.0) {
                return bad(format!("completion needs sr in (0, 1] and eta > 0, got {sr} and {eta}"));
            }
        }
        if let DataSource::Synthetic { planted_rank, noise, .. } = self.problem.source() {
            if *planted_rank == 0 || !(*noise >= 0.0) {
                return bad("synthetic data needs a positive planted rank and noise >= 0".into());
            }
        }
        Ok(())
    }

    pub fn stop_options(&self) -> StopOptions {
        let stopping = self.mode == StopMode::Stopping;
        StopOptions {
            max_iters: self.max_iters,
            max_seconds: self.max_time,
            tol_obj: stopping.then_some(self.tol_obj),
            tol_change: stopping.then_some(self.tol_change),
            consecutive: self.consecutive,
        }
    }
}

/// One finished (algorithm, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub seed: u64,
    /// Trials with the same instance id solve the same objective.
    pub instance: u64,
    pub trace: Trace,
    /// `||X Y^T - M||_F / ||M||_F` against the data (observed entries only
    /// for completion).
    pub relerr: f64,
    /// Completion only: error against the full matrix.
    pub rec_err: Option<f64>,
    #[serde(default)]
    pub normalized_fval: f64,
}

impl TrialRecord {
    pub fn final_objective(&self) -> f64 {
        self.trace.final_objective()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub trials: usize,
    pub mean_iterations: f64,
    pub median_iterations: f64,
    pub mean_seconds: f64,
    pub mean_final_objective: f64,
    pub mean_relerr: f64,
    pub mean_rec_err: Option<f64>,
    pub mean_normalized_fval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: TrialConfig,
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<AlgorithmSummary>,
    pub grid: Vec<f64>,
    pub curves: Vec<EvolutionCurve>,
}

impl Report {
    /// Writes the JSON report to `path` and one trace CSV per trial next to
    /// it, named `<stem>-<algorithm>-seed<seed>.csv`.
    pub fn write_files(&self, path: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| NaumError::io(dir, e))?;
        }
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| NaumError::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let mut written = vec![path.to_path_buf()];
        for t in &self.trials {
            let name = format!("{stem}-{}-seed{}.csv", file_safe(&t.algorithm), t.seed);
            let csv = path.with_file_name(name);
            fs::write(&csv, t.trace.to_csv()).map_err(|e| NaumError::io(&csv, e))?;
            written.push(csv);
        }
        Ok(written)
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Builds the report from finished trials. Depends only on its inputs, so
/// re-running it on stored records reproduces the report exactly.
pub fn aggregate(config: &TrialConfig, mut trials: Vec<TrialRecord>) -> Report {
    // Normalized final values within each seed.
    let mut by_seed: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for t in &trials {
        let f = t.final_objective();
        let e = by_seed.entry(t.seed).or_insert((f, f));
        e.0 = e.0.min(f);
        e.1 = e.1.max(f);
    }
    for t in &mut trials {
        let (lo, hi) = by_seed[&t.seed];
        t.normalized_fval = if hi > lo {
            (t.final_objective() - lo) / (hi - lo)
        } else {
            0.0
        };
    }

    // E(t) uses the smallest objective over every trial of the same instance.
    let mut f_min: BTreeMap<u64, f64> = BTreeMap::new();
    for t in &trials {
        let lowest = t.trace.time_objective().map(|(_, f)| f).fold(f64::INFINITY, f64::min);
        let e = f_min.entry(t.instance).or_insert(f64::INFINITY);
        *e = e.min(lowest);
    }
    let horizon = config
        .max_time
        .unwrap_or_else(|| trials.iter().map(|t| t.trace.elapsed()).fold(0.0, f64::max));
    let grid = default_grid(horizon, config.grid_points);

    let mut labels: Vec<String> = Vec::new();
    for t in &trials {
        if !labels.contains(&t.algorithm) {
            labels.push(t.algorithm.clone());
        }
    }
    let mut summaries = Vec::new();
    let mut curves = Vec::new();
    for label in labels {
        let group: Vec<&TrialRecord> = trials.iter().filter(|t| t.algorithm == label).collect();
        let mut values = vec![0.0; grid.len()];
        for t in &group {
            for (v, e) in values.iter_mut().zip(trace_curve(&t.trace, f_min[&t.instance], &grid)) {
                *v += e;
            }
        }
        for v in &mut values {
            *v /= group.len() as f64;
        }
        let rec: Vec<f64> = group.iter().filter_map(|t| t.rec_err).collect();
        summaries.push(AlgorithmSummary {
            algorithm: label.clone(),
            trials: group.len(),
            mean_iterations: mean(group.iter().map(|t| t.trace.iterations() as f64)),
            median_iterations: median(group.iter().map(|t| t.trace.iterations() as f64).collect()),
            mean_seconds: mean(group.iter().map(|t| t.trace.elapsed())),
            mean_final_objective: mean(group.iter().map(|t| t.final_objective())),
            mean_relerr: mean(group.iter().map(|t| t.relerr)),
            mean_rec_err: (!rec.is_empty()).then(|| mean(rec)),
            mean_normalized_fval: mean(group.iter().map(|t| t.normalized_fval)),
        });
        curves.push(EvolutionCurve {
            algorithm: label,
            values,
        });
    }
    Report {
        config: config.clone(),
        trials,
        summaries,
        grid,
        curves,
    }
}

/// A concrete problem for one seed.
#[derive(Debug, Clone)]
pub enum Instance {
    Nmf(NmfProblem),
    Mc { problem: McProblem, truth: DenseMatrix },
}

fn planted(m: usize, n: usize, k: usize, noise: f64, seed: u64, nonneg: bool) -> Result<DenseMatrix> {
    let abs = |w: DenseMatrix| if nonneg { w.map(f64::abs) } else { w };
    let x = abs(StreamRng::new(seed, streams::DATA_X).normal_matrix(m, k));
    let y = abs(StreamRng::new(seed, streams::DATA_Y).normal_matrix(n, k));
    let mut data = x.matmul_t(&y)?;
    if noise > 0.0 {
        let e = StreamRng::new(seed, streams::NOISE).normal_matrix(m, n);
        let scale = noise * data.fro_norm() / e.fro_norm().max(f64::MIN_POSITIVE);
        data.axpy(scale, &e)?;
    }
    Ok(if nonneg { data.map(|v| v.max(0.0)) } else { data })
}

/// Loads file data once; synthetic data is generated per instance.
fn load_source(problem: &ProblemConfig) -> Result<Option<LoadedMatrix>> {
    match problem.source() {
        DataSource::File { path, format } => {
            let format = format
                .or_else(|| MatrixFormat::from_extension(path))
                .ok_or_else(|| NaumError::InvalidConfig(format!("cannot infer the format of {}", path.display())))?;
            load_matrix(path, format).map(Some)
        }
        DataSource::Synthetic { .. } => Ok(None),
    }
}

/// Instance id and data matrix for `seed`.
fn instance_data(problem: &ProblemConfig, loaded: Option<&LoadedMatrix>, seed: u64) -> Result<(u64, LoadedMatrix)> {
    match (problem.source(), loaded) {
        (DataSource::File { .. }, Some(m)) => Ok((0, m.clone())),
        (
            DataSource::Synthetic {
                m,
                n,
                planted_rank,
                noise,
                data_seed,
            },
            _,
        ) => {
            let s = data_seed.unwrap_or(seed);
            let data = planted(*m, *n, *planted_rank, *noise, s, !problem.is_completion())?;
            Ok((s, LoadedMatrix::Dense(data)))
        }
        _ => unreachable!("file sources are loaded before instances are built"),
    }
}

pub fn build_instance(problem: &ProblemConfig, loaded: Option<&LoadedMatrix>, seed: u64) -> Result<(u64, Instance)> {
    let (id, data) = instance_data(problem, loaded, seed)?;
    match problem {
        ProblemConfig::Nmf { rank, x_max, y_max, .. } => {
            let data: NmfData = match data {
                LoadedMatrix::Dense(d) => d.into(),
                LoadedMatrix::Sparse(s) => s.into(),
            };
            let bound = |b: &Option<f64>| crate::model::Bound::Scalar(b.unwrap_or(nmf::DEFAULT_UPPER));
            let p = NmfProblem::with_bounds(data, *rank, bound(x_max), bound(y_max))?;
            Ok((id, Instance::Nmf(p)))
        }
        ProblemConfig::Mc {
            rank,
            eta,
            eta_relative,
            sr,
            ..
        } => {
            // The mask depends on the trial seed, so each seed is its own instance.
            let truth = data.into_dense();
            let pattern = sample_mask(truth.rows(), truth.cols(), *sr, seed)?;
            let observed = pattern.gather(&truth);
            let eta = if *eta_relative {
                eta * observed.iter().map(|v| v * v).sum::<f64>().sqrt()
            } else {
                *eta
            };
            let problem = McProblem::new(pattern, observed, *rank, eta)?;
            Ok((seed, Instance::Mc { problem, truth }))
        }
    }
}

fn run_one(
    alg: &AlgorithmConfig,
    instance: &Instance,
    x0: &DenseMatrix,
    y0: &DenseMatrix,
    opts: &StopOptions,
) -> Result<(Trace, f64, Option<f64>)> {
    match instance {
        Instance::Nmf(p) => {
            let sol = match alg.params(false)? {
                Some(params) => nmf::solve_naum(p, &params, opts, x0, y0)?.0,
                None => nmf::solve_hals(p, opts, x0, y0)?,
            };
            let relerr = p.relative_error(&sol.x, &sol.y)?;
            Ok((sol.trace, relerr, None))
        }
        Instance::Mc { problem, truth } => {
            let sol = match alg.params(true)? {
                Some(params) => mc::solve_naum(problem, &params, opts, x0, y0)?,
                None => mc::solve_palm(problem, opts, x0, y0)?,
            };
            let observed: f64 = problem.observed().iter().map(|v| v * v).sum::<f64>().sqrt();
            let fit: f64 = problem
                .residual(&sol.x, &sol.y)
                .iter()
                .map(|r| r * r)
                .sum::<f64>()
                .sqrt();
            let relerr = if observed > 0.0 { fit / observed } else { f64::NAN };
            Ok((sol.trace, relerr, Some(recovery_error(&sol.x, &sol.y, truth)?)))
        }
    }
}

/// The starting point every algorithm of a seed shares.
pub fn shared_start(instance: &Instance, seed: u64) -> (DenseMatrix, DenseMatrix) {
    match instance {
        Instance::Nmf(p) => init_nmf(p.m(), p.n(), p.rank(), p.m_fro_sq().sqrt(), seed),
        Instance::Mc { problem, .. } => init_mc(problem.m(), problem.n(), problem.rank(), seed),
    }
}

pub fn run_trials(config: &TrialConfig) -> Result<Report> {
    run_trials_with(config, Execution::from_jobs(config.jobs))
}

pub fn run_trials_with(config: &TrialConfig, exec: Execution) -> Result<Report> {
    config.validate()?;
    let loaded = load_source(&config.problem)?;
    let setups = exec
        .map(config.seeds.clone(), |seed| -> Result<_> {
            let (id, instance) = build_instance(&config.problem, loaded.as_ref(), seed)?;
            let (x0, y0) = shared_start(&instance, seed);
            Ok((seed, id, instance, x0, y0))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let opts = config.stop_options();
    let jobs: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|s| (0..config.algorithms.len()).map(move |a| (s, a)))
        .collect();
    info!("running {} trials ({:?})", jobs.len(), exec);
    let records = exec
        .map(jobs, |(s, a)| {
            let (seed, id, instance, x0, y0) = &setups[s];
            let alg = &config.algorithms[a];
            run_one(alg, instance, x0, y0, &opts)
                .map(|(trace, relerr, rec_err)| TrialRecord {
                    algorithm: alg.label(),
                    seed: *seed,
                    instance: *id,
                    trace,
                    relerr,
                    rec_err,
                    normalized_fval: 0.0,
                })
                .map_err(|e| NaumError::Trial {
                    algorithm: alg.label(),
                    seed: *seed,
                    source: Box::new(e),
                })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, records))
}
