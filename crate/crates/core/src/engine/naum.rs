use std::collections::VecDeque;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::engine::kernel::{CandidateEval, DenseKernel, NaumKernel};
use crate::engine::trace::{Diagnostics, IterationRecord, Termination, Trace};
use crate::error::{NaumError, Result};
use crate::linalg::DenseMatrix;
use crate::model::{ProblemSpec, SolverParams};

/// Absolute slack allowed in the runtime sufficient-descent check.
pub const DESCENT_SLACK: f64 = 1e-8;

/// Current iterate and the non-monotone objective window.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    /// `F(X^i, Y^i)` for the last `min(k + 1, window + 1)` iterates, oldest first.
    pub history: VecDeque<f64>,
    /// Accepted `mu` of the previous iteration (`mu_min` before the first).
    pub last_mu: f64,
    pub last_sigma: f64,
    pub k: usize,
    window: usize,
}

impl IterateState {
    pub fn new(x: DenseMatrix, y: DenseMatrix, objective: f64, params: &SolverParams) -> Self {
        let mut history = VecDeque::with_capacity(params.window + 1);
        history.push_back(objective);
        IterateState {
            x,
            y,
            history,
            last_mu: params.mu_min,
            last_sigma: params.sigma_min,
            k: 0,
            window: params.window,
        }
    }

    pub fn objective(&self) -> f64 {
        *self.history.back().expect("history is never empty")
    }

    /// `max_{[k-N]_+ <= i <= k} F(X^i, Y^i)`.
    pub fn window_max(&self) -> f64 {
        self.history.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn commit(&mut self, outcome: &LineSearchOutcome) {
        self.x = outcome.u.clone();
        self.y = outcome.v.clone();
        if self.history.len() == self.window + 1 {
            self.history.pop_front();
        }
        self.history.push_back(outcome.objective);
        self.last_mu = outcome.mu;
        self.last_sigma = outcome.sigma;
        self.k += 1;
    }
}

/// Accepted candidate of one line search.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub mu: f64,
    pub sigma: f64,
    pub inner_iterations: usize,
    pub forced_accept: bool,
    pub objective: f64,
    pub dx_sq: f64,
    pub dy_sq: f64,
    pub mu_max: f64,
    /// Last `sigma` cap, or `curvature * ||U||_F^2 + c` for the accepted `U`
    /// when the `mu` cap was never reached.
    pub sigma_cap: f64,
    /// `||Y^k||_F^2` and `||U||_F^2` used by the caps.
    pub y_fro_sq: f64,
    pub u_fro_sq: f64,
}

impl LineSearchOutcome {
    /// `lhs - rhs` of the sufficient-descent inequality with Frobenius
    /// surrogates; non-positive in exact arithmetic.
    pub fn descent_gap(&self, params: &SolverParams, previous_objective: f64) -> f64 {
        let l = params.curvature();
        let lhs = self.objective - previous_objective;
        let rhs = -(self.mu - l * self.y_fro_sq) / 2.0 * self.dx_sq
            - (self.sigma - l * self.u_fro_sq) / 2.0 * self.dy_sq;
        lhs - rhs
    }

    /// Upper bound on inner iterations implied by the geometric growth of
    /// `mu` and `sigma`.
    pub fn inner_cap(&self, params: &SolverParams) -> usize {
        let ln_tau = params.tau.ln();
        let mu_term = ((self.mu_max.ln() - params.mu_min.ln()) / ln_tau + 2.0).floor();
        let sigma_term = ((self.sigma_cap.ln() - params.sigma_min.ln()) / ln_tau + 1.0).floor();
        (mu_term.max(1.0) + sigma_term.max(0.0) + 1.0) as usize
    }
}

/// Step 2: the non-monotone line search over `(mu, sigma)`. The kernel must
/// already have run `begin_iteration` on the state's iterate.
pub fn line_search<K: NaumKernel>(
    kernel: &mut K,
    params: &SolverParams,
    state: &IterateState,
) -> Result<LineSearchOutcome> {
    let (x, y) = (&state.x, &state.y);
    let l = params.curvature();
    let reference = state.window_max();

    let mu0 = (0.1 * state.last_mu).max(params.mu_min);
    let sigma0 = (0.1 * state.last_sigma)
        .max(params.sigma_min)
        .min(params.sigma_max);
    let y_fro_sq = kernel.y_fro_sq(y);
    let mu_max = l * y_fro_sq + params.c;

    let mut mu_trial = mu0;
    let mut sigma = sigma0;
    let mut inner = 0usize;

    loop {
        // (2a)
        let mu = mu_trial.min(mu_max);
        let u = kernel.update_x(x, y, mu)?;
        let u_fro_sq = kernel.u_fro_sq(&u);
        let sigma_cap = l * u_fro_sq + params.c;
        loop {
            // (2b)
            let v = kernel.update_y(x, y, &u, sigma)?;
            let CandidateEval {
                objective,
                dx_sq,
                dy_sq,
            } = kernel.evaluate(x, y, &u, &v)?;
            inner += 1;
            // (2c)
            let accepted = objective - reference <= -0.5 * params.c * (dx_sq + dy_sq);
            let exhausted = mu == mu_max && sigma == sigma_cap;
            if accepted || exhausted {
                if !accepted {
                    warn!(
                        "line search exhausted at k={} (objective {objective:e}, reference {reference:e}); accepting",
                        state.k
                    );
                }
                return Ok(LineSearchOutcome {
                    u,
                    v,
                    mu,
                    sigma,
                    inner_iterations: inner,
                    forced_accept: !accepted,
                    objective,
                    dx_sq,
                    dy_sq,
                    mu_max,
                    sigma_cap,
                    y_fro_sq,
                    u_fro_sq,
                });
            }
            // (2d)
            if mu == mu_max {
                sigma = (params.tau * sigma).min(sigma_cap);
                continue;
            }
            mu_trial = params.tau * mu;
            sigma *= params.tau;
            break;
        }
    }
}

/// Termination controls for the outer loop. `None` disables a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopOptions {
    pub max_iters: usize,
    pub max_seconds: Option<f64>,
    /// Relative objective change `|F^k - F^{k-1}| / (F^k + 1)`.
    pub tol_obj: Option<f64>,
    /// Relative successive change
    /// `(||dX||_F + ||dY||_F) / (||X^k||_F + ||Y^k||_F + 1)`.
    pub tol_change: Option<f64>,
    /// Iterations in a row the objective rule must hold.
    pub consecutive: usize,
}

impl Default for StopOptions {
    fn default() -> Self {
        StopOptions {
            max_iters: 10_000,
            max_seconds: None,
            tol_obj: Some(1e-4),
            tol_change: Some(1e-4),
            consecutive: 3,
        }
    }
}

impl StopOptions {
    /// Only the iteration cap applies.
    pub fn fixed_iterations(max_iters: usize) -> Self {
        StopOptions {
            max_iters,
            max_seconds: None,
            tol_obj: None,
            tol_change: None,
            consecutive: 3,
        }
    }
}

/// Tracks the two relative-change stopping rules.
#[derive(Debug, Clone)]
pub(crate) struct StopRules {
    opts: StopOptions,
    streak: usize,
}

impl StopRules {
    pub(crate) fn new(opts: &StopOptions) -> Self {
        StopRules {
            opts: opts.clone(),
            streak: 0,
        }
    }

    pub(crate) fn before_iteration(&self, k: usize, seconds: f64) -> Option<Termination> {
        if k >= self.opts.max_iters {
            return Some(Termination::MaxIterations);
        }
        match self.opts.max_seconds {
            Some(limit) if seconds >= limit => Some(Termination::MaxSeconds),
            _ => None,
        }
    }

    pub(crate) fn after_commit(
        &mut self,
        previous: f64,
        current: f64,
        dx: f64,
        dy: f64,
        x_norm: f64,
        y_norm: f64,
    ) -> Option<Termination> {
        if let Some(tol) = self.opts.tol_obj {
            if (current - previous).abs() / (current + 1.0) <= tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            if self.streak >= self.opts.consecutive.max(1) {
                return Some(Termination::ObjectiveStalled);
            }
        }
        if let Some(tol) = self.opts.tol_change {
            if (dx + dy) / (x_norm + y_norm + 1.0) <= tol {
                return Some(Termination::SmallChange);
            }
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub trace: Trace,
}

/// Runs NAUM with the generic dense kernel.
pub fn solve(
    prob: &ProblemSpec,
    params: &SolverParams,
    opts: &StopOptions,
    x0: &DenseMatrix,
    y0: &DenseMatrix,
) -> Result<Solution> {
    let mut kernel = DenseKernel::new(prob, params)?;
    solve_with_kernel(&mut kernel, params, opts, x0, y0)
}

/// The outer loop: Step 1 via the kernel, Step 2 via [`line_search`], Step 3
/// commit, then the stopping rules.
pub fn solve_with_kernel<K: NaumKernel>(
    kernel: &mut K,
    params: &SolverParams,
    opts: &StopOptions,
    x0: &DenseMatrix,
    y0: &DenseMatrix,
) -> Result<Solution> {
    params.validate()?;
    let start = Instant::now();
    kernel.check_start(x0, y0)?;
    let f0 = kernel.objective(x0, y0)?;
    if !f0.is_finite() {
        return Err(NaumError::InfeasibleInitialization(format!(
            "objective at the start is {f0}"
        )));
    }
    let mut state = IterateState::new(x0.clone(), y0.clone(), f0, params);
    let mut rules = StopRules::new(opts);
    let mut diagnostics = Diagnostics {
        worst_descent_gap: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut records = Vec::new();

    let termination = loop {
        if let Some(t) = rules.before_iteration(state.k, start.elapsed().as_secs_f64()) {
            break t;
        }
        kernel.begin_iteration(&state.x, &state.y)?;
        let outcome = line_search(kernel, params, &state)?;

        let previous = state.objective();
        let window_before = state.window_max();
        let gap = outcome.descent_gap(params, previous);
        diagnostics.worst_descent_gap = diagnostics.worst_descent_gap.max(gap);
        if gap > DESCENT_SLACK {
            diagnostics.descent_violations += 1;
            warn!("sufficient descent missed by {gap:e} at k={}", state.k);
        }
        if outcome.inner_iterations > outcome.inner_cap(params) {
            diagnostics.cap_violations += 1;
        }
        if outcome.forced_accept {
            diagnostics.forced_accepts += 1;
        }
        diagnostics.max_inner_iterations = diagnostics.max_inner_iterations.max(outcome.inner_iterations);
        diagnostics.total_inner_iterations += outcome.inner_iterations;

        kernel.commit(&outcome.u, &outcome.v, outcome.inner_iterations)?;
        state.commit(&outcome);
        if state.window_max() > window_before {
            diagnostics.window_increases += 1;
        }

        let (dx, dy) = (outcome.dx_sq.max(0.0).sqrt(), outcome.dy_sq.max(0.0).sqrt());
        records.push(IterationRecord {
            k: state.k,
            objective: outcome.objective,
            seconds: start.elapsed().as_secs_f64(),
            mu: outcome.mu,
            sigma: outcome.sigma,
            inner_iterations: outcome.inner_iterations,
            dx,
            dy,
        });
        if let Some(t) = rules.after_commit(
            previous,
            outcome.objective,
            dx,
            dy,
            state.x.fro_norm(),
            state.y.fro_norm(),
        ) {
            break t;
        }
    };

    if records.is_empty() {
        diagnostics.worst_descent_gap = 0.0;
    }
    Ok(Solution {
        x: state.x,
        y: state.y,
        trace: Trace {
            initial_objective: f0,
            records,
            termination,
            diagnostics,
        },
    })
}
