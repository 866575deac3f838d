//! Box-constrained nonnegative matrix factorization.
//!
//! The NAUM kernel here never forms `Z^k` or any `m x n` product. Column
//! updates work from `X (Y^T Y)`, `M Y`, `Y (X^T U)` and `M^T U`, and the
//! objective and successive changes come from trace identities on `r x r`
//! Gram blocks.

use std::time::Instant;

use log::{debug, warn};

use crate::engine::{
    solve, solve_with_kernel, CandidateEval, Diagnostics, IterationRecord, NaumKernel, Solution,
    StopOptions, StopRules, Trace,
};
use crate::error::{NaumError, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, LinearMap};
use crate::model::{Bound, ProblemSpec, ProxOracle, Scheme, SolverParams};

/// Default entrywise upper bound on both factors.
pub const DEFAULT_UPPER: f64 = 1e16;
/// Denominator guard for HALS.
pub const HALS_EPS: f64 = 1e-16;
/// Accepted iterations between full Gram refreshes.
pub const REFRESH_EVERY: usize = 100;
/// Rejected candidates in one line search that force a refresh.
pub const REFRESH_REJECTIONS: usize = 5;
/// Relative drift tolerated between cached and recomputed objective.
pub const DRIFT_TOL: f64 = 1e-8;
/// A trace-identity value below this fraction of the terms it cancels is
/// recomputed directly.
pub const CANCELLATION_TOL: f64 = 1e-8;

/// Data matrix, stored densely or in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub enum NmfData {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl NmfData {
    pub fn rows(&self) -> usize {
        match self {
            NmfData::Dense(m) => m.rows(),
            NmfData::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            NmfData::Dense(m) => m.cols(),
            NmfData::Sparse(m) => m.cols(),
        }
    }

    pub fn fro_sq(&self) -> f64 {
        match self {
            NmfData::Dense(m) => m.fro_sq(),
            NmfData::Sparse(m) => m.fro_sq(),
        }
    }

    /// `M B`.
    pub fn mul(&self, b: &DenseMatrix) -> DenseMatrix {
        match self {
            NmfData::Dense(m) => m.matmul(b).expect("shape checked by caller"),
            NmfData::Sparse(m) => m.mul_dense(b),
        }
    }

    /// `M^T A`.
    pub fn t_mul(&self, a: &DenseMatrix) -> DenseMatrix {
        match self {
            NmfData::Dense(m) => m.t_matmul(a).expect("shape checked by caller"),
            NmfData::Sparse(m) => m.t_mul_dense(a),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            NmfData::Dense(m) => m.clone(),
            NmfData::Sparse(m) => m.to_dense(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            NmfData::Dense(m) => m.data(),
            NmfData::Sparse(m) => m.values(),
        }
    }
}

impl From<DenseMatrix> for NmfData {
    fn from(m: DenseMatrix) -> Self {
        NmfData::Dense(m)
    }
}

impl From<CsrMatrix> for NmfData {
    fn from(m: CsrMatrix) -> Self {
        NmfData::Sparse(m)
    }
}

/// `min 1/2 ||X Y^T - M||_F^2` s.t. `0 <= X <= x_max`, `0 <= Y <= y_max`.
#[derive(Debug, Clone)]
pub struct NmfProblem {
    data: NmfData,
    rank: usize,
    x_max: Bound,
    y_max: Bound,
    m_fro_sq: f64,
}

impl NmfProblem {
    pub fn new(data: impl Into<NmfData>, rank: usize) -> Result<Self> {
        Self::with_bounds(
            data,
            rank,
            Bound::Scalar(DEFAULT_UPPER),
            Bound::Scalar(DEFAULT_UPPER),
        )
    }

    pub fn with_bounds(data: impl Into<NmfData>, rank: usize, x_max: Bound, y_max: Bound) -> Result<Self> {
        let data = data.into();
        let (m, n) = (data.rows(), data.cols());
        if rank == 0 || rank > m.min(n) {
            return Err(NaumError::dims(format!(
                "rank {rank} must lie in 1..={} for a {m}x{n} matrix",
                m.min(n)
            )));
        }
        if data.values().iter().any(|v| !v.is_finite()) {
            return Err(NaumError::NonFiniteInput("data matrix".into()));
        }
        if data.values().iter().any(|&v| v < 0.0) {
            return Err(NaumError::InvalidData("NMF data must be nonnegative".into()));
        }
        for (bound, rows, name) in [(&x_max, m, "x_max"), (&y_max, n, "y_max")] {
            let positive = match bound {
                Bound::Scalar(v) => *v > 0.0,
                Bound::Matrix(b) => {
                    b.ensure_shape(rows, rank, name)?;
                    b.data().iter().all(|&v| v > 0.0)
                }
            };
            if !positive {
                return Err(NaumError::param(format!("{name} must be positive")));
            }
        }
        let m_fro_sq = data.fro_sq();
        Ok(NmfProblem {
            data,
            rank,
            x_max,
            y_max,
            m_fro_sq,
        })
    }

    pub fn data(&self) -> &NmfData {
        &self.data
    }

    pub fn m(&self) -> usize {
        self.data.rows()
    }

    pub fn n(&self) -> usize {
        self.data.cols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn x_max(&self) -> &Bound {
        &self.x_max
    }

    pub fn y_max(&self) -> &Bound {
        &self.y_max
    }

    pub fn m_fro_sq(&self) -> f64 {
        self.m_fro_sq
    }

    pub fn check_factors(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        x.ensure_shape(self.m(), self.rank, "X")?;
        y.ensure_shape(self.n(), self.rank, "Y")
    }

    pub fn feasible(&self, x: &DenseMatrix, y: &DenseMatrix) -> bool {
        let inside = |w: &DenseMatrix, ub: &Bound| {
            (0..w.rows()).all(|i| {
                w.row(i)
                    .iter()
                    .enumerate()
                    .all(|(j, &v)| v >= 0.0 && v <= ub.at(i, j))
            })
        };
        inside(x, &self.x_max) && inside(y, &self.y_max)
    }

    /// `||X Y^T - M||_F^2`, evaluated entrywise.
    pub fn residual_sq(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.check_factors(x, y)?;
        let p = x.matmul_t(y)?;
        Ok(match &self.data {
            NmfData::Dense(m) => p.dist(m).powi(2),
            NmfData::Sparse(m) => {
                let mut total = p.fro_sq();
                for (i, j, v) in m.triples() {
                    let f = p.get(i, j);
                    total += (f - v) * (f - v) - f * f;
                }
                total.max(0.0)
            }
        })
    }

    /// `1/2 ||X Y^T - M||_F^2`, or `+inf` outside the box.
    pub fn objective(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        let r = self.residual_sq(x, y)?;
        if !self.feasible(x, y) {
            return Ok(f64::INFINITY);
        }
        Ok(0.5 * r)
    }

    /// `||X Y^T - M||_F / ||M||_F`.
    pub fn relative_error(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        if self.m_fro_sq == 0.0 {
            return Err(NaumError::InvalidData("relative error of a zero matrix".into()));
        }
        Ok((self.residual_sq(x, y)? / self.m_fro_sq).sqrt())
    }

    /// The general-model form: box indicators and the identity map, with the
    /// data densified.
    pub fn to_problem_spec(&self) -> Result<ProblemSpec> {
        let (m, n) = (self.m(), self.n());
        ProblemSpec::new(
            ProxOracle::boxed(Bound::Scalar(0.0), self.x_max.clone())?,
            ProxOracle::boxed(Bound::Scalar(0.0), self.y_max.clone())?,
            LinearMap::identity(m, n),
            self.data.to_dense().into_data(),
            self.rank,
        )
    }
}

/// Products shared by the column updates and the trace identities.
#[derive(Debug, Clone)]
pub struct NmfCache {
    /// `X^T X` and `Y^T Y` for the current iterate.
    pub gram_x: DenseMatrix,
    pub gram_y: DenseMatrix,
    /// `X (Y^T Y)`, `m x r`.
    pub x_gram_y: DenseMatrix,
    /// `M Y`, `m x r`.
    pub m_y: DenseMatrix,
    /// Candidate-dependent blocks, refreshed by [`NmfCache::prepare_y`].
    pub gram_u: DenseMatrix,
    pub xt_u: DenseMatrix,
    /// `M^T U`, `n x r`.
    pub mt_u: DenseMatrix,
    /// `Y (X^T U)`, `n x r`.
    pub y_xt_u: DenseMatrix,
    pub m_fro_sq: f64,
}

impl NmfCache {
    /// Builds every iterate block from scratch.
    pub fn new(problem: &NmfProblem, x: &DenseMatrix, y: &DenseMatrix) -> Self {
        let r = problem.rank();
        let mut cache = NmfCache {
            gram_x: x.gram(),
            gram_y: y.gram(),
            x_gram_y: DenseMatrix::zeros(problem.m(), r),
            m_y: DenseMatrix::zeros(problem.m(), r),
            gram_u: DenseMatrix::zeros(r, r),
            xt_u: DenseMatrix::zeros(r, r),
            mt_u: DenseMatrix::zeros(problem.n(), r),
            y_xt_u: DenseMatrix::zeros(problem.n(), r),
            m_fro_sq: problem.m_fro_sq(),
        };
        cache.prepare_x(problem, x, y);
        cache
    }

    /// Step-1 products for the X sweep; assumes `gram_x`, `gram_y` match `(x, y)`.
    pub fn prepare_x(&mut self, problem: &NmfProblem, x: &DenseMatrix, y: &DenseMatrix) {
        self.x_gram_y = x.matmul(&self.gram_y).expect("r x r");
        self.m_y = problem.data().mul(y);
    }

    /// Products for the Y sweep against candidate `u`.
    pub fn prepare_y(&mut self, problem: &NmfProblem, x: &DenseMatrix, y: &DenseMatrix, u: &DenseMatrix) {
        self.gram_u = u.gram();
        self.xt_u = x.t_matmul(u).expect("same rows");
        self.mt_u = problem.data().t_mul(u);
        self.y_xt_u = y.matmul(&self.xt_u).expect("r x r");
    }
}

fn weights(params: &SolverParams) -> (f64, f64) {
    let s = params.alpha + params.beta;
    (params.alpha / s, params.beta / s)
}

/// Closed-form column `i` of the X sweep. Columns `j < i` of `u` must hold
/// the already-updated values; the rest of `u` is ignored.
pub fn nmf_column_x(
    i: usize,
    cache: &NmfCache,
    problem: &NmfProblem,
    params: &SolverParams,
    x: &DenseMatrix,
    u: &DenseMatrix,
    mu: f64,
) -> Vec<f64> {
    let (a, b) = weights(params);
    let g = &cache.gram_y;
    let r = problem.rank();
    let denom = params.alpha * g.get(i, i) + mu;
    (0..problem.m())
        .map(|row| {
            let mut p = a * cache.x_gram_y.get(row, i) + b * cache.m_y.get(row, i);
            let (urow, xrow) = (u.row(row), x.row(row));
            for j in 0..r {
                if j < i {
                    p -= urow[j] * g.get(j, i);
                } else if j > i {
                    p -= xrow[j] * g.get(j, i);
                }
            }
            let v = (params.alpha * p + mu * xrow[i]) / denom;
            v.max(0.0).min(problem.x_max().at(row, i))
        })
        .collect()
}

/// Closed-form column `i` of the Y sweep against candidate `u`; columns
/// `j < i` of `v` must already be updated.
pub fn nmf_column_y(
    i: usize,
    cache: &NmfCache,
    problem: &NmfProblem,
    params: &SolverParams,
    y: &DenseMatrix,
    v: &DenseMatrix,
    sigma: f64,
) -> Vec<f64> {
    let (a, b) = weights(params);
    let g = &cache.gram_u;
    let r = problem.rank();
    let denom = params.alpha * g.get(i, i) + sigma;
    (0..problem.n())
        .map(|row| {
            let mut q = a * cache.y_xt_u.get(row, i) + b * cache.mt_u.get(row, i);
            let (vrow, yrow) = (v.row(row), y.row(row));
            for j in 0..r {
                if j < i {
                    q -= vrow[j] * g.get(j, i);
                } else if j > i {
                    q -= yrow[j] * g.get(j, i);
                }
            }
            let val = (params.alpha * q + sigma * yrow[i]) / denom;
            val.max(0.0).min(problem.y_max().at(row, i))
        })
        .collect()
}

fn sweep_x(cache: &NmfCache, problem: &NmfProblem, params: &SolverParams, x: &DenseMatrix, mu: f64) -> DenseMatrix {
    let mut u = x.clone();
    for i in 0..problem.rank() {
        let col = nmf_column_x(i, cache, problem, params, x, &u, mu);
        u.set_column(i, &col);
    }
    u
}

fn sweep_y(cache: &NmfCache, problem: &NmfProblem, params: &SolverParams, y: &DenseMatrix, sigma: f64) -> DenseMatrix {
    let mut v = y.clone();
    for i in 0..problem.rank() {
        let col = nmf_column_y(i, cache, problem, params, y, &v, sigma);
        v.set_column(i, &col);
    }
    v
}

/// Objective and changes of a candidate, plus the blocks the next
/// iteration can reuse.
#[derive(Debug, Clone)]
pub struct NmfMetrics {
    pub objective: f64,
    pub dx_sq: f64,
    pub dy_sq: f64,
    pub gram_v: DenseMatrix,
}

/// Trace-identity evaluation of `(U, V)`; `cache` must have been prepared
/// for `U` with [`NmfCache::prepare_y`]. Successive changes that cancel to
/// nearly nothing are recomputed from the factors.
pub fn nmf_cached_metrics(
    cache: &NmfCache,
    u: &DenseMatrix,
    v: &DenseMatrix,
    x: &DenseMatrix,
    y: &DenseMatrix,
) -> NmfMetrics {
    let gram_v = v.gram();
    let yt_v = y.t_matmul(v).expect("same rows");
    let fit = cache.gram_u.inner(&gram_v);
    let cross = cache.mt_u.inner(v);
    let objective = 0.5 * (fit - 2.0 * cross + cache.m_fro_sq).max(0.0);
    let (tu, tx) = (cache.gram_u.trace(), cache.gram_x.trace());
    let mut dx_sq = (tu - 2.0 * cache.xt_u.trace() + tx).max(0.0);
    if dx_sq <= CANCELLATION_TOL * (tu + tx) {
        dx_sq = u.dist(x).powi(2);
    }
    let (tv, ty) = (gram_v.trace(), cache.gram_y.trace());
    let mut dy_sq = (tv - 2.0 * yt_v.trace() + ty).max(0.0);
    if dy_sq <= CANCELLATION_TOL * (tv + ty) {
        dy_sq = v.dist(y).powi(2);
    }
    NmfMetrics {
        objective,
        dx_sq,
        dy_sq,
        gram_v,
    }
}

/// Refresh bookkeeping for [`NmfKernel`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CacheStats {
    pub refreshes: usize,
    pub drift_events: usize,
    pub max_relative_drift: f64,
}

/// NAUM kernel for hierarchical-prox updates on both blocks.
#[derive(Debug, Clone)]
pub struct NmfKernel<'a> {
    problem: &'a NmfProblem,
    params: SolverParams,
    cache: Option<NmfCache>,
    pending_gram_v: Option<DenseMatrix>,
    last_objective: f64,
    accepted: usize,
    stats: CacheStats,
}

impl<'a> NmfKernel<'a> {
    pub fn new(problem: &'a NmfProblem, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        if params.scheme_x != Scheme::HierarchicalProx || params.scheme_y != Scheme::HierarchicalProx {
            return Err(NaumError::UnsupportedScheme {
                scheme: format!("{}/{}", params.scheme_x, params.scheme_y),
                oracle: "nmf kernel".into(),
            });
        }
        Ok(NmfKernel {
            problem,
            params: params.clone(),
            cache: None,
            pending_gram_v: None,
            last_objective: f64::NAN,
            accepted: 0,
            stats: CacheStats::default(),
        })
    }

    pub fn stats(&self) -> &CacheStats {
        &self.stats
    }

    fn cache(&self) -> &NmfCache {
        self.cache.as_ref().expect("begin_iteration runs first")
    }

    fn refresh(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        let fresh = NmfCache::new(self.problem, x, y);
        let dense = self.problem.objective(x, y)?;
        let rel = (self.last_objective - dense).abs() / (1.0 + dense.abs());
        self.stats.refreshes += 1;
        self.stats.max_relative_drift = self.stats.max_relative_drift.max(rel);
        if rel > DRIFT_TOL {
            self.stats.drift_events += 1;
            warn!("{}", NaumError::CacheDrift { relative: rel });
        }
        debug!("gram refresh at accept {} (drift {rel:e})", self.accepted);
        self.cache = Some(fresh);
        Ok(())
    }
}

impl NaumKernel for NmfKernel<'_> {
    fn check_start(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        self.problem.check_factors(x, y)?;
        if !self.problem.feasible(x, y) {
            return Err(NaumError::InfeasibleInitialization(
                "NMF start must satisfy 0 <= X <= x_max and 0 <= Y <= y_max".into(),
            ));
        }
        Ok(())
    }

    fn objective(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.problem.objective(x, y)
    }

    fn begin_iteration(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        match self.cache.as_mut() {
            Some(cache) => cache.prepare_x(self.problem, x, y),
            None => self.cache = Some(NmfCache::new(self.problem, x, y)),
        }
        Ok(())
    }

    fn y_fro_sq(&self, _y: &DenseMatrix) -> f64 {
        self.cache().gram_y.trace()
    }

    fn update_x(&mut self, x: &DenseMatrix, y: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
        let u = sweep_x(self.cache(), self.problem, &self.params, x, mu);
        let problem = self.problem;
        self.cache
            .as_mut()
            .expect("begin_iteration runs first")
            .prepare_y(problem, x, y, &u);
        Ok(u)
    }

    fn u_fro_sq(&self, _u: &DenseMatrix) -> f64 {
        self.cache().gram_u.trace()
    }

    fn update_y(&mut self, _x: &DenseMatrix, y: &DenseMatrix, _u: &DenseMatrix, sigma: f64) -> Result<DenseMatrix> {
        Ok(sweep_y(self.cache(), self.problem, &self.params, y, sigma))
    }

    fn evaluate(&mut self, x: &DenseMatrix, y: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> Result<CandidateEval> {
        let mut metrics = nmf_cached_metrics(self.cache(), u, v, x, y);
        if metrics.objective <= 0.5 * CANCELLATION_TOL * self.problem.m_fro_sq() {
            metrics.objective = self.problem.objective(u, v)?;
        }
        self.last_objective = metrics.objective;
        self.pending_gram_v = Some(metrics.gram_v);
        Ok(CandidateEval {
            objective: metrics.objective,
            dx_sq: metrics.dx_sq,
            dy_sq: metrics.dy_sq,
        })
    }

    fn commit(&mut self, x: &DenseMatrix, y: &DenseMatrix, inner_iterations: usize) -> Result<()> {
        self.accepted += 1;
        let rejections = inner_iterations.saturating_sub(1);
        if self.accepted.is_multiple_of(REFRESH_EVERY) || rejections >= REFRESH_REJECTIONS {
            return self.refresh(x, y);
        }
        let gram_v = self.pending_gram_v.take().expect("evaluate precedes commit");
        let cache = self.cache.as_mut().expect("begin_iteration runs first");
        cache.gram_x = cache.gram_u.clone();
        cache.gram_y = gram_v;
        Ok(())
    }
}

/// NAUM on an NMF instance. Hierarchical updates on both blocks use the
/// implicit kernel; any other scheme falls back to the dense general path.
pub fn solve_naum(
    problem: &NmfProblem,
    params: &SolverParams,
    opts: &StopOptions,
    x0: &DenseMatrix,
    y0: &DenseMatrix,
) -> Result<(Solution, Option<CacheStats>)> {
    if params.scheme_x == Scheme::HierarchicalProx && params.scheme_y == Scheme::HierarchicalProx {
        let mut kernel = NmfKernel::new(problem, params)?;
        let sol = solve_with_kernel(&mut kernel, params, opts, x0, y0)?;
        Ok((sol, Some(kernel.stats)))
    } else {
        let spec = problem.to_problem_spec()?;
        Ok((solve(&spec, params, opts, x0, y0)?, None))
    }
}

fn hals_sweep(w: &mut DenseMatrix, cross: &DenseMatrix, gram: &DenseMatrix) {
    let r = w.cols();
    for i in 0..r {
        let d = gram.get(i, i).max(HALS_EPS);
        for row in 0..w.rows() {
            let wr = w.row(row);
            let mut num = cross.get(row, i);
            for j in 0..r {
                if j != i {
                    num -= wr[j] * gram.get(j, i);
                }
            }
            w.set(row, i, (num / d).max(0.0));
        }
    }
}

/// One HALS pass: the X sweep against `Y`, then the Y sweep against the new X.
pub fn hals_step(x: &DenseMatrix, y: &DenseMatrix, data: &NmfData) -> (DenseMatrix, DenseMatrix) {
    let mut xn = x.clone();
    hals_sweep(&mut xn, &data.mul(y), &y.gram());
    let mut yn = y.clone();
    hals_sweep(&mut yn, &data.t_mul(&xn), &xn.gram());
    (xn, yn)
}

/// HALS driven by the same stopping rules as NAUM. The trace records `0` for
/// `mu` and `sigma`.
pub fn solve_hals(problem: &NmfProblem, opts: &StopOptions, x0: &DenseMatrix, y0: &DenseMatrix) -> Result<Solution> {
    let start = Instant::now();
    problem.check_factors(x0, y0)?;
    if !problem.feasible(x0, y0) {
        return Err(NaumError::InfeasibleInitialization(
            "HALS start must be nonnegative".into(),
        ));
    }
    let f0 = problem.objective(x0, y0)?;
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut rules = StopRules::new(opts);
    let mut records = Vec::new();
    let mut previous = f0;
    let data = problem.data();
    let termination = loop {
        if let Some(t) = rules.before_iteration(records.len(), start.elapsed().as_secs_f64()) {
            break t;
        }
        let (xn, yn) = hals_step(&x, &y, data);
        let gx = xn.gram();
        let objective = 0.5
            * (gx.inner(&yn.gram()) - 2.0 * data.t_mul(&xn).inner(&yn) + problem.m_fro_sq()).max(0.0);
        let (dx, dy) = (xn.dist(&x), yn.dist(&y));
        x = xn;
        y = yn;
        records.push(IterationRecord {
            k: records.len() + 1,
            objective,
            seconds: start.elapsed().as_secs_f64(),
            mu: 0.0,
            sigma: 0.0,
            inner_iterations: 1,
            dx,
            dy,
        });
        let stop = rules.after_commit(previous, objective, dx, dy, x.fro_norm(), y.fro_norm());
        previous = objective;
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
