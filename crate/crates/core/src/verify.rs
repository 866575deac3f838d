//! Self-check suites run by `naum verify`. Each suite draws its random cases
//! from a fixed seed and runs them as a batch through [`Execution`].

use serde::Serialize;

use crate::engine::{block_update, StopOptions};
use crate::error::Result;
use crate::harness::init::{init_mc, init_nmf};
use crate::harness::rng::StreamRng;
use crate::linalg::{nuclear_norm, shrink_singular, DenseMatrix, LinearMap, SamplingPattern};
use crate::mc::{self, mc_update_x, mc_update_y, sample_mask, McProblem};
use crate::model::{derive_params, ParamOverrides, ProblemSpec, ProxOracle, Scheme};
use crate::nmf::{self, nmf_column_x, NmfCache, NmfProblem};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// First failure, if any.
    pub detail: Option<String>,
}

impl SuiteResult {
    fn from_cases(name: &'static str, cases: Vec<Result<Option<String>>>) -> Self {
        let mut out = SuiteResult {
            name,
            passed: 0,
            failed: 0,
            detail: None,
        };
        for case in cases {
            let failure = match case {
                Ok(None) => None,
                Ok(Some(msg)) => Some(msg),
                Err(e) => Some(e.to_string()),
            };
            match failure {
                None => out.passed += 1,
                Some(msg) => {
                    out.failed += 1;
                    out.detail.get_or_insert(msg);
                }
            }
        }
        out
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

const ALPHAS: [f64; 5] = [0.4, 0.6, 0.8, 1.1, 2.0];

fn check(ok: bool, msg: impl FnOnce() -> String) -> Option<String> {
    (!ok).then(msg)
}

/// `F(X, Y) = Theta(X, Y, Z)` at the closed-form `Z`, for both map kinds.
pub fn potential_identity(exec: Execution, cases: usize) -> SuiteResult {
    let results = exec.map((0..cases as u64).collect(), |case| -> Result<Option<String>> {
        let mut rng = StreamRng::new(case, 101);
        let (m, n) = (2 + (case as usize * 7) % 19, 2 + (case as usize * 5) % 19);
        let r = 1 + (case as usize) % m.min(n).min(5);
        let map = if case % 2 == 0 {
            LinearMap::identity(m, n)
        } else {
            LinearMap::Sampling(sample_mask(m, n, 0.5, case)?)
        };
        let b: Vec<f64> = (0..map.output_dim()).map(|_| rng.normal()).collect();
        let prob = ProblemSpec::new(ProxOracle::l1(0.3)?, ProxOracle::Zero, map, b, r)?;
        let params = derive_params(ALPHAS[case as usize % ALPHAS.len()], &ParamOverrides::default())?;
        let x = rng.normal_matrix(m, r);
        let y = rng.normal_matrix(n, r);
        let f = prob.objective(&x, &y)?;
        let theta = prob.potential(&params, &x, &y, &prob.z_formula(&params, &x, &y)?)?;
        Ok(check((f - theta).abs() <= 1e-10 * (1.0 + f.abs()), || {
            format!("case {case}: F = {f:e}, Theta = {theta:e}")
        }))
    });
    SuiteResult::from_cases("potential-identity", results)
}

/// Closed-form proximal maps beat random perturbations of themselves.
pub fn prox_oracles(exec: Execution, cases: usize) -> SuiteResult {
    let results = exec.map((0..cases as u64).collect(), |case| -> Result<Option<String>> {
        let mut rng = StreamRng::new(case, 102);
        let v = rng.normal_matrix(6, 4);
        let t = 0.2 + rng.uniform();
        let oracles = [
            ProxOracle::nuclear(0.7)?,
            ProxOracle::l1(0.4)?,
            ProxOracle::nonneg_box(0.5)?,
        ];
        for oracle in &oracles {
            let w = oracle.prox(t, &v)?;
            let value = |p: &DenseMatrix| -> Result<f64> { Ok(oracle.eval(p)? + p.dist(&v).powi(2) / (2.0 * t)) };
            let best = value(&w)?;
            for _ in 0..10 {
                let mut p = w.clone();
                p.axpy(1e-3, &rng.normal_matrix(6, 4))?;
                let p = if oracle.is_indicator() { oracle.prox(1.0, &p)? } else { p };
                if value(&p)? < best - 1e-12 {
                    return Ok(Some(format!("case {case}: {} prox is not a minimizer", oracle.name())));
                }
            }
        }
        let nu = 0.5;
        let w = shrink_singular(&v, nu)?;
        let s_in = nuclear_norm(&v)?;
        Ok(check(nuclear_norm(&w)? <= s_in + 1e-12, || format!("case {case}: shrinkage grew the nuclear norm")))
    });
    SuiteResult::from_cases("prox-oracles", results)
}

/// Runtime sufficient-descent and line-search diagnostics stay clean on
/// short NMF and completion runs.
pub fn descent(exec: Execution, iterations: usize) -> SuiteResult {
    let jobs: Vec<(bool, f64)> = [false, true]
        .into_iter()
        .flat_map(|mc| [0.4, 0.6, 2.0].map(|a| (mc, a)))
        .collect();
    let results = exec.map(jobs, |(completion, alpha)| -> Result<Option<String>> {
        let mut rng = StreamRng::new(7, 103);
        let opts = StopOptions::fixed_iterations(iterations);
        let trace = if completion {
            let truth = rng.normal_matrix(30, 4).matmul_t(&rng.normal_matrix(25, 4))?;
            let prob = McProblem::from_dense(&truth, sample_mask(30, 25, 0.5, 7)?, 4, 1e-2)?;
            let params = derive_params(
                alpha,
                &ParamOverrides {
                    scheme_x: Some(Scheme::ProxLinear),
                    scheme_y: Some(Scheme::ProxLinear),
                    ..Default::default()
                },
            )?;
            let (x0, y0) = init_mc(30, 25, 4, 7);
            mc::solve_naum(&prob, &params, &opts, &x0, &y0)?.trace
        } else {
            let data = rng.uniform_matrix(30, 4).matmul_t(&rng.uniform_matrix(25, 4))?;
            let (x0, y0) = init_nmf(30, 25, 4, data.fro_norm(), 7);
            let prob = NmfProblem::new(data, 4)?;
            let params = derive_params(alpha, &ParamOverrides::default())?;
            nmf::solve_naum(&prob, &params, &opts, &x0, &y0)?.0.trace
        };
        let d = &trace.diagnostics;
        Ok(check(
            d.descent_violations == 0 && d.cap_violations == 0 && d.forced_accepts == 0 && d.window_increases == 0,
            || format!("{} alpha={alpha}: {d:?}", if completion { "mc" } else { "nmf" }),
        ))
    });
    SuiteResult::from_cases("descent", results)
}

/// Implicit NMF and completion updates agree with the dense-Z general path.
pub fn implicit_vs_dense(exec: Execution, cases: usize) -> SuiteResult {
    let results = exec.map((0..cases as u64).collect(), |case| -> Result<Option<String>> {
        let mut rng = StreamRng::new(case, 104);
        let (m, n) = (3 + (case as usize * 7) % 18, 3 + (case as usize * 3) % 13);
        let r = 1 + (case as usize) % 5.min(m.min(n));
        let alpha = ALPHAS[case as usize % ALPHAS.len()];

        let data = rng.uniform_matrix(m, n);
        let prob = NmfProblem::new(data, r)?;
        let spec = prob.to_problem_spec()?;
        let params = derive_params(alpha, &ParamOverrides::default())?;
        let (x, y) = (rng.uniform_matrix(m, r), rng.uniform_matrix(n, r));
        let mu = 0.5 + 2.0 * rng.uniform();
        let cache = NmfCache::new(&prob, &x, &y);
        let mut u = x.clone();
        for i in 0..r {
            let col = nmf_column_x(i, &cache, &prob, &params, &x, &u, mu);
            u.set_column(i, &col);
        }
        let z = spec.z_formula(&params, &x, &y)?;
        let reference = block_update(Scheme::HierarchicalProx, spec.psi(), &x, &y, &z, alpha, mu)?;
        let nmf_gap = u.max_abs_diff(&reference);

        let truth = rng.normal_matrix(m, n);
        let pattern: SamplingPattern = sample_mask(m, n, 0.6, case)?;
        let mcp = McProblem::from_dense(&truth, pattern, r, 0.5)?;
        let spec = mcp.to_problem_spec()?;
        let params = derive_params(
            alpha,
            &ParamOverrides {
                scheme_x: Some(Scheme::ProxLinear),
                scheme_y: Some(Scheme::ProxLinear),
                ..Default::default()
            },
        )?;
        let (x, y) = (rng.normal_matrix(m, r), rng.normal_matrix(n, r));
        let (mu, sigma) = (1.0 + rng.uniform(), 1.0 + rng.uniform());
        let z = spec.z_formula(&params, &x, &y)?;
        let u = mc_update_x(&mcp, &x, &y, mu)?;
        let u_ref = block_update(Scheme::ProxLinear, spec.psi(), &x, &y, &z, alpha, mu)?;
        let v = mc_update_y(&mcp, &params, &x, &u, &y, sigma)?;
        let v_ref = block_update(Scheme::ProxLinear, spec.phi(), &y, &u, &z.transpose(), alpha, sigma)?;
        let mc_gap = u.max_abs_diff(&u_ref).max(v.max_abs_diff(&v_ref));
        Ok(check(nmf_gap <= 1e-10 && mc_gap <= 1e-10, || {
            format!("case {case}: nmf gap {nmf_gap:e}, mc gap {mc_gap:e}")
        }))
    });
    SuiteResult::from_cases("implicit-vs-dense", results)
}

/// Every suite at its default size.
pub fn run_all(exec: Execution) -> Vec<SuiteResult> {
    vec![
        potential_identity(exec, 100),
        prox_oracles(exec, 50),
        descent(exec, 200),
        implicit_vs_dense(exec, 50),
    ]
}
