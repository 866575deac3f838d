//! Matrix completion with nuclear-norm regularized factors:
//! `min eta/2 (||X||_* + ||Y||_*) + 1/2 ||P_Omega(X Y^T - M)||_F^2`.
//!
//! Residuals are evaluated entry by entry on the pattern from row slices of
//! the factors, so no `m x n` matrix is ever built.

use std::time::Instant;

use rand::seq::index;

use crate::engine::{
    solve, solve_with_kernel, CandidateEval, Diagnostics, IterationRecord, NaumKernel, Solution,
    StopOptions, StopRules, Trace,
};
use crate::error::{NaumError, Result};
use crate::harness::rng::{streams, StreamRng};
use crate::linalg::{
    nuclear_norm, shrink_singular_with_norm, spectral_norm_sq, DenseMatrix, LinearMap, SamplingPattern,
};
use crate::model::{ProblemSpec, ProxOracle, Scheme, SolverParams};

/// Lower guard on PALM step denominators.
pub const PALM_EPS: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct McProblem {
    pattern: SamplingPattern,
    observed: Vec<f64>,
    rank: usize,
    eta: f64,
}

impl McProblem {
    pub fn new(pattern: SamplingPattern, observed: Vec<f64>, rank: usize, eta: f64) -> Result<Self> {
        if observed.len() != pattern.len() {
            return Err(NaumError::dims(format!(
                "{} observed values for {} pattern entries",
                observed.len(),
                pattern.len()
            )));
        }
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(NaumError::NonFiniteInput("observed values".into()));
        }
        let (m, n) = (pattern.rows(), pattern.cols());
        if rank == 0 || rank > m.min(n) {
            return Err(NaumError::dims(format!(
                "rank {rank} must lie in 1..={} for a {m}x{n} matrix",
                m.min(n)
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(NaumError::param(format!("eta must be positive, got {eta}")));
        }
        Ok(McProblem {
            pattern,
            observed,
            rank,
            eta,
        })
    }

    /// Observes `full` on `pattern`.
    pub fn from_dense(full: &DenseMatrix, pattern: SamplingPattern, rank: usize, eta: f64) -> Result<Self> {
        full.ensure_shape(pattern.rows(), pattern.cols(), "M")?;
        let observed = pattern.gather(full);
        Self::new(pattern, observed, rank, eta)
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn m(&self) -> usize {
        self.pattern.rows()
    }

    pub fn n(&self) -> usize {
        self.pattern.cols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn check_factors(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        x.ensure_shape(self.m(), self.rank, "X")?;
        y.ensure_shape(self.n(), self.rank, "Y")
    }

    /// `x_i^T y_j - m_ij` for every observed `(i, j)`.
    pub fn residual(&self, x: &DenseMatrix, y: &DenseMatrix) -> Vec<f64> {
        self.pattern.residual(x, y, &self.observed)
    }

    fn data_term(&self, x: &DenseMatrix, y: &DenseMatrix) -> f64 {
        0.5 * self.residual(x, y).iter().map(|r| r * r).sum::<f64>()
    }

    pub fn objective(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.check_factors(x, y)?;
        let reg = nuclear_norm(x)? + nuclear_norm(y)?;
        Ok(0.5 * self.eta * reg + self.data_term(x, y))
    }

    /// The general-model form with `(eta/2) ||.||_*` on both blocks and the
    /// sampling map.
    pub fn to_problem_spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(
            ProxOracle::nuclear(0.5 * self.eta)?,
            ProxOracle::nuclear(0.5 * self.eta)?,
            LinearMap::Sampling(self.pattern.clone()),
            self.observed.clone(),
            self.rank,
        )
    }
}

/// `||X Y^T - M||_F / ||M||_F` against the full ground truth.
pub fn recovery_error(x: &DenseMatrix, y: &DenseMatrix, truth: &DenseMatrix) -> Result<f64> {
    let norm = truth.fro_norm();
    if norm == 0.0 {
        return Err(NaumError::InvalidData("recovery error against a zero matrix".into()));
    }
    Ok(x.matmul_t(y)?.dist(truth) / norm)
}

/// `S_{eta/(2 mu)}(X - R Y / mu)` where `R = P_Omega(X Y^T - M)` is given by
/// its values on the pattern. Returns the new block and its nuclear norm.
fn shrink_step(
    w: &DenseMatrix,
    correction: &DenseMatrix,
    step: f64,
    eta: f64,
) -> Result<(DenseMatrix, f64)> {
    let mut arg = w.clone();
    arg.axpy(-1.0 / step, correction)?;
    shrink_singular_with_norm(&arg, eta / (2.0 * step))
}

pub fn mc_update_x(prob: &McProblem, x: &DenseMatrix, y: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    let r = prob.residual(x, y);
    let ry = prob.pattern.sparse_mul(&r, y);
    Ok(shrink_step(x, &ry, mu, prob.eta)?.0)
}

pub fn mc_update_y(
    prob: &McProblem,
    params: &SolverParams,
    x: &DenseMatrix,
    u: &DenseMatrix,
    y: &DenseMatrix,
    sigma: f64,
) -> Result<DenseMatrix> {
    let r = prob.residual(x, y);
    let correction = y_correction(prob, params, x, u, y, &r)?;
    Ok(shrink_step(y, &correction, sigma, prob.eta)?.0)
}

/// `alpha Y (U - X)^T U + R^T U`, the gradient-like term of the Y step.
fn y_correction(
    prob: &McProblem,
    params: &SolverParams,
    x: &DenseMatrix,
    u: &DenseMatrix,
    y: &DenseMatrix,
    r: &[f64],
) -> Result<DenseMatrix> {
    let du = u.sub(x)?.t_matmul(u)?;
    let mut out = prob.pattern.sparse_t_mul(r, u);
    out.axpy(params.alpha, &y.matmul(&du)?)?;
    Ok(out)
}

/// NAUM kernel for prox-linear updates on both blocks.
#[derive(Debug, Clone)]
pub struct McKernel<'a> {
    prob: &'a McProblem,
    params: SolverParams,
    residual: Vec<f64>,
    ry: DenseMatrix,
    y_corr: DenseMatrix,
    u_nuclear: f64,
    v_nuclear: f64,
}

impl<'a> McKernel<'a> {
    pub fn new(prob: &'a McProblem, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        if params.scheme_x != Scheme::ProxLinear || params.scheme_y != Scheme::ProxLinear {
            return Err(NaumError::UnsupportedScheme {
                scheme: format!("{}/{}", params.scheme_x, params.scheme_y),
                oracle: "mc kernel".into(),
            });
        }
        Ok(McKernel {
            prob,
            params: params.clone(),
            residual: Vec::new(),
            ry: DenseMatrix::zeros(prob.m(), prob.rank()),
            y_corr: DenseMatrix::zeros(prob.n(), prob.rank()),
            u_nuclear: 0.0,
            v_nuclear: 0.0,
        })
    }
}

impl NaumKernel for McKernel<'_> {
    fn check_start(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        self.prob.check_factors(x, y)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(NaumError::NonFiniteInput("starting factors".into()));
        }
        Ok(())
    }

    fn objective(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.prob.objective(x, y)
    }

    fn begin_iteration(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        self.residual = self.prob.residual(x, y);
        self.ry = self.prob.pattern.sparse_mul(&self.residual, y);
        Ok(())
    }

    fn update_x(&mut self, x: &DenseMatrix, y: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
        let (u, nuc) = shrink_step(x, &self.ry, mu, self.prob.eta)?;
        self.u_nuclear = nuc;
        self.y_corr = y_correction(self.prob, &self.params, x, &u, y, &self.residual)?;
        Ok(u)
    }

    fn update_y(&mut self, _x: &DenseMatrix, y: &DenseMatrix, _u: &DenseMatrix, sigma: f64) -> Result<DenseMatrix> {
        let (v, nuc) = shrink_step(y, &self.y_corr, sigma, self.prob.eta)?;
        self.v_nuclear = nuc;
        Ok(v)
    }

    fn evaluate(&mut self, x: &DenseMatrix, y: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> Result<CandidateEval> {
        Ok(CandidateEval {
            objective: 0.5 * self.prob.eta * (self.u_nuclear + self.v_nuclear) + self.prob.data_term(u, v),
            dx_sq: u.dist(x).powi(2),
            dy_sq: v.dist(y).powi(2),
        })
    }
}

/// NAUM on a completion instance. Prox-linear on both blocks uses the
/// pattern kernel; other schemes go through the dense general path.
pub fn solve_naum(
    prob: &McProblem,
    params: &SolverParams,
    opts: &StopOptions,
    x0: &DenseMatrix,
    y0: &DenseMatrix,
) -> Result<Solution> {
    if params.scheme_x == Scheme::ProxLinear && params.scheme_y == Scheme::ProxLinear {
        let mut kernel = McKernel::new(prob, params)?;
        solve_with_kernel(&mut kernel, params, opts, x0, y0)
    } else {
        solve(&prob.to_problem_spec()?, params, opts, x0, y0)
    }
}

/// Internal PALM step also returning the step constants and nuclear norms.
fn palm_step_full(x: &DenseMatrix, y: &DenseMatrix, prob: &McProblem) -> Result<PalmStep> {
    let ly = spectral_norm_sq(y).max(PALM_EPS);
    let r = prob.residual(x, y);
    let (xn, nx) = shrink_step(x, &prob.pattern.sparse_mul(&r, y), ly, prob.eta)?;
    let lx = spectral_norm_sq(&xn).max(PALM_EPS);
    let r = prob.residual(&xn, y);
    let (yn, ny) = shrink_step(y, &prob.pattern.sparse_t_mul(&r, &xn), lx, prob.eta)?;
    let objective = 0.5 * prob.eta * (nx + ny) + prob.data_term(&xn, &yn);
    Ok(PalmStep {
        x: xn,
        y: yn,
        lx,
        ly,
        objective,
    })
}

struct PalmStep {
    x: DenseMatrix,
    y: DenseMatrix,
    lx: f64,
    ly: f64,
    objective: f64,
}

/// One PALM iteration with spectral-norm step sizes.
pub fn palm_step(x: &DenseMatrix, y: &DenseMatrix, prob: &McProblem) -> Result<(DenseMatrix, DenseMatrix)> {
    prob.check_factors(x, y)?;
    let s = palm_step_full(x, y, prob)?;
    Ok((s.x, s.y))
}

/// PALM under the shared stopping rules. The trace stores `||Y||^2` in the
/// `mu` column and `||X^+||^2` in the `sigma` column.
pub fn solve_palm(prob: &McProblem, opts: &StopOptions, x0: &DenseMatrix, y0: &DenseMatrix) -> Result<Solution> {
    let start = Instant::now();
    prob.check_factors(x0, y0)?;
    let f0 = prob.objective(x0, y0)?;
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut rules = StopRules::new(opts);
    let mut records = Vec::new();
    let mut previous = f0;
    let termination = loop {
        if let Some(t) = rules.before_iteration(records.len(), start.elapsed().as_secs_f64()) {
            break t;
        }
        let step = palm_step_full(&x, &y, prob)?;
        let (dx, dy) = (step.x.dist(&x), step.y.dist(&y));
        x = step.x;
        y = step.y;
        records.push(IterationRecord {
            k: records.len() + 1,
            objective: step.objective,
            seconds: start.elapsed().as_secs_f64(),
            mu: step.ly,
            sigma: step.lx,
            inner_iterations: 1,
            dx,
            dy,
        });
        let stop = rules.after_commit(previous, step.objective, dx, dy, x.fro_norm(), y.fro_norm());
        previous = step.objective;
        if let Some(t) = stop {
            break t;
        }
    };
    Ok(Solution {
        x,
        y,
        trace: Trace {
            initial_objective: f0,
            records,
            termination,
            diagnostics: Diagnostics::default(),
        },
    })
}

/// `round(m n sr)` distinct entries drawn uniformly without replacement.
pub fn sample_mask(m: usize, n: usize, sr: f64, seed: u64) -> Result<SamplingPattern> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(NaumError::param(format!("sampling ratio must lie in (0, 1], got {sr}")));
    }
    if m == 0 || n == 0 {
        return Err(NaumError::dims(format!("cannot sample a {m}x{n} matrix")));
    }
    let total = m * n;
    let count = ((total as f64) * sr).round() as usize;
    let mut rng = StreamRng::new(seed, streams::MASK);
    let entries = index::sample(rng.inner_mut(), total, count.min(total))
        .into_iter()
        .map(|k| (k / n, k % n))
        .collect();
    SamplingPattern::new(m, n, entries)
}
