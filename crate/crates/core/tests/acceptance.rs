//! Acceptance checks 1 to 11. Runs as a plain binary so each criterion
//! prints one PASS/FAIL line under `cargo test`; exits nonzero on any FAIL.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use naum::engine::{Diagnostics, IterationRecord, StopOptions, Termination, Trace};
use naum::harness::rng::StreamRng;
use naum::harness::trials::build_instance;
use naum::harness::{
    init_mc, init_nmf, run_trials_with, trace_curve, AlgorithmConfig, DataSource, ProblemConfig, Report, StopMode,
    TrialConfig,
};
use naum::linalg::{shrink_singular, DenseMatrix, LinearMap};
use naum::mc::{self, mc_update_x, mc_update_y, recovery_error, sample_mask, McProblem};
use naum::model::{derive_params, Bound, ParamOverrides, ProblemSpec, ProxOracle, Scheme, SolverParams};
use naum::nmf::{self, nmf_column_x, nmf_column_y, NmfCache, NmfProblem};
use naum::par::Execution;

type Outcome = Result<String, String>;

const ALPHAS: [f64; 5] = [0.4, 0.6, 0.8, 1.1, 2.0];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn proxlin(alpha: f64) -> SolverParams {
    let o = ParamOverrides {
        scheme_x: Some(Scheme::ProxLinear),
        scheme_y: Some(Scheme::ProxLinear),
        ..Default::default()
    };
    derive_params(alpha, &o).unwrap()
}

fn hier(alpha: f64) -> SolverParams {
    derive_params(alpha, &ParamOverrides::default()).unwrap()
}

fn objectives(trace: &Trace) -> Vec<f64> {
    std::iter::once(trace.initial_objective)
        .chain(trace.records.iter().map(|r| r.objective))
        .collect()
}

// 1
fn potential_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let mut rng = StreamRng::new(case, 1);
        let m = 1 + (rng.uniform() * 20.0) as usize;
        let n = 1 + (rng.uniform() * 20.0) as usize;
        let r = 1 + (rng.uniform() * m.min(n).min(5) as f64) as usize;
        let alpha = ALPHAS[case as usize % 5];
        let sampled = case % 2 == 1;
        let pattern = sample_mask(m, n, 0.5, case).unwrap();
        let map = if sampled {
            LinearMap::Sampling(pattern.clone())
        } else {
            LinearMap::identity(m, n)
        };
        let b: Vec<f64> = (0..map.output_dim()).map(|_| rng.normal()).collect();
        let prob = ProblemSpec::new(ProxOracle::l1(0.3).unwrap(), ProxOracle::nuclear(0.7).unwrap(), map, b.clone(), r)
            .unwrap();
        let params = hier(alpha);
        let x = rng.normal_matrix(m, r);
        let y = rng.normal_matrix(n, r);
        let f = prob.objective(&x, &y).unwrap();
        let theta = prob.potential(&params, &x, &y, &prob.z_formula(&params, &x, &y).unwrap()).unwrap();

        // Independent evaluation.
        let beta = alpha / (alpha - 1.0);
        let w = beta / (alpha + beta);
        let p = product(&x, &y);
        let reg = 0.3 * x.data().iter().map(|v| v.abs()).sum::<f64>() + 0.7 * nuclear_ref(&y);
        let obs: Vec<(usize, usize)> = if sampled {
            pattern.entries().to_vec()
        } else {
            (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
        };
        let mut z = p.clone();
        let mut fit = 0.0;
        for (l, &(i, j)) in obs.iter().enumerate() {
            fit += (p.get(i, j) - b[l]).powi(2);
            z.set(i, j, (1.0 - w) * p.get(i, j) + w * b[l]);
        }
        let f_ref = reg + 0.5 * fit;
        let data_ref: f64 = obs.iter().enumerate().map(|(l, &(i, j))| (z.get(i, j) - b[l]).powi(2)).sum();
        let theta_ref = reg + alpha / 2.0 * fro_sq(&diff(&p, &z)) + beta / 2.0 * data_ref;

        let tol = 1e-10 * (1.0 + f.abs());
        for (what, gap) in [
            ("F vs Theta", (f - theta).abs()),
            ("reference F vs Theta", (f_ref - theta_ref).abs()),
            ("F vs reference F", (f - f_ref).abs()),
        ] {
            ensure(gap <= tol, || format!("case {case} (alpha {alpha}, sampled {sampled}): {what} gap {gap:e}"))?;
            worst = worst.max(gap / (1.0 + f.abs()));
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("100 instances, worst relative gap {worst:.1e}, {elapsed:.2?}"))
}

// 2
fn parameter_derivation() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs().max(1.0);
    // (alpha, beta, gamma, rho) worked by hand.
    let table = [
        (2.0, 2.0, 0.0, 1.0),
        (1.1, 11.0, 0.0, 1.0),
        (0.8, -4.0, 3.2, 1.0),
        (0.6, -1.5, 0.9, 1.0),
        (0.5, -1.0, 0.5, 1.0),
        (0.4, -2.0 / 3.0, 4.0 / 15.0, 2.25),
        (0.2, -0.25, 0.05, 16.0),
    ];
    for (alpha, beta, gamma, rho) in table {
        let p = hier(alpha);
        ensure(
            close(p.beta, beta) && close(p.gamma, gamma) && close(p.rho, rho),
            || format!("alpha {alpha}: got beta {} gamma {} rho {}", p.beta, p.gamma, p.rho),
        )?;
        ensure(close(p.curvature(), alpha + 2.0 * gamma * rho), || format!("alpha {alpha}: curvature"))?;
        ensure(
            p.tau == 4.0 && p.c == 1e-4 && p.window == 3 && p.mu_min == 1.0 && p.sigma_min == 1.0 && p.sigma_max == 1e6,
            || format!("alpha {alpha}: defaults {p:?}"),
        )?;
    }
    for bad in [0.0, 1.0, f64::NAN, f64::INFINITY] {
        ensure(derive_params(bad, &ParamOverrides::default()).is_err(), || format!("alpha {bad} accepted"))?;
    }
    Ok("7 alphas exact, degenerate alphas rejected".into())
}

// 3
fn shrinkage_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let x = StreamRng::new(case, 3).normal_matrix(6, 4);
        let s1 = spectral_ref(&x);
        for nu in [0.0, 0.5, s1 + 1.0] {
            let gap = shrink_singular(&x, nu).unwrap().max_abs_diff(&shrink_ref(&x, nu));
            ensure(gap <= 1e-10, || format!("case {case}, nu {nu}: gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("300 shrinkages, worst entry gap {worst:.1e}"))
}

struct SuiteRun {
    label: String,
    trace: Trace,
    window: usize,
    c: f64,
}

fn synthetic_runs(iters: usize) -> Vec<SuiteRun> {
    let opts = StopOptions::fixed_iterations(iters);
    let mut runs = Vec::new();
    for alpha in [0.4, 0.6, 2.0] {
        let (_, _, data) = planted(40, 30, 4, 11, true);
        let prob = NmfProblem::new(data.clone(), 4).unwrap();
        let (x0, y0) = init_nmf(40, 30, 4, data.fro_norm(), 11);
        let params = hier(alpha);
        let (sol, _) = nmf::solve_naum(&prob, &params, &opts, &x0, &y0).unwrap();
        runs.push(SuiteRun {
            label: format!("nmf alpha={alpha}"),
            trace: sol.trace,
            window: params.window,
            c: params.c,
        });

        let (_, _, truth) = planted(40, 30, 3, 12, false);
        let pattern = sample_mask(40, 30, 0.5, 12).unwrap();
        let obs = observed(&pattern, &truth);
        let eta = 1e-3 * obs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let prob = McProblem::new(pattern, obs, 3, eta).unwrap();
        let (x0, y0) = init_mc(40, 30, 3, 12);
        let params = proxlin(alpha);
        let sol = mc::solve_naum(&prob, &params, &opts, &x0, &y0).unwrap();
        runs.push(SuiteRun {
            label: format!("mc alpha={alpha}"),
            trace: sol.trace,
            window: params.window,
            c: params.c,
        });
    }
    runs
}

// 4
fn descent_assertion(runs: &[SuiteRun]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for run in runs {
        let d = &run.trace.diagnostics;
        ensure(run.trace.iterations() == 500, || format!("{}: {} iterations", run.label, run.trace.iterations()))?;
        ensure(d.descent_violations == 0 && d.worst_descent_gap <= 1e-8, || {
            format!("{}: {} violations, worst gap {:e}", run.label, d.descent_violations, d.worst_descent_gap)
        })?;
        worst = worst.max(d.worst_descent_gap);
    }
    Ok(format!("6 runs x 500 iterations, worst lhs-rhs {worst:.1e}"))
}

// 5
fn line_search_bound(runs: &[SuiteRun]) -> Outcome {
    let mut max_inner = 0;
    for run in runs {
        let d = &run.trace.diagnostics;
        ensure(d.cap_violations == 0 && d.forced_accepts == 0 && d.window_increases == 0, || {
            format!("{}: {d:?}", run.label)
        })?;
        // Recheck from the trace alone.
        let f = objectives(&run.trace);
        let ups = window_increases(&f, run.window);
        ensure(ups == 0, || format!("{}: windowed max rose {ups} times", run.label))?;
        for (k, rec) in run.trace.records.iter().enumerate() {
            let reference = f[k.saturating_sub(run.window)..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let bound = reference - 0.5 * run.c * (rec.dx * rec.dx + rec.dy * rec.dy);
            ensure(rec.objective <= bound + 1e-8, || {
                format!("{}: step {} misses the acceptance test by {:e}", run.label, rec.k, rec.objective - bound)
            })?;
        }
        max_inner = max_inner.max(d.max_inner_iterations);
    }
    Ok(format!("no cap violations or forced accepts, max inner iterations {max_inner}"))
}

// 6
fn implicit_vs_dense() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let mut rng = StreamRng::new(case, 6);
        let m = 2 + (rng.uniform() * 19.0) as usize;
        let n = 2 + (rng.uniform() * 14.0) as usize;
        let r = 1 + (rng.uniform() * m.min(n).min(5) as f64) as usize;
        let alpha = ALPHAS[case as usize % 5];
        let beta = alpha / (alpha - 1.0);
        let w = beta / (alpha + beta);
        let (mu, sigma) = (0.5 + 4.0 * rng.uniform(), 0.5 + 4.0 * rng.uniform());

        // NMF: Gauss-Seidel over columns against the dense Z.
        let (xmax, ymax) = (0.8, 0.9);
        let data = rng.uniform_matrix(m, n);
        let prob = NmfProblem::with_bounds(data.clone(), r, Bound::Scalar(xmax), Bound::Scalar(ymax)).unwrap();
        let params = hier(alpha);
        let x = rng.uniform_matrix(m, r).map(|v| v * xmax);
        let y = rng.uniform_matrix(n, r).map(|v| v * ymax);
        let mut cache = NmfCache::new(&prob, &x, &y);
        let mut u = x.clone();
        for i in 0..r {
            let col = nmf_column_x(i, &cache, &prob, &params, &x, &u, mu);
            u.set_column(i, &col);
        }
        cache.prepare_y(&prob, &x, &y, &u);
        let mut v = y.clone();
        for i in 0..r {
            let col = nmf_column_y(i, &cache, &prob, &params, &y, &v, sigma);
            v.set_column(i, &col);
        }
        let p = product(&x, &y);
        let z = DenseMatrix::from_fn(m, n, |i, j| (1.0 - w) * p.get(i, j) + w * data.get(i, j));
        let u_ref = hier_reference(&x, &y, &z, alpha, mu, xmax);
        let v_ref = hier_reference(&y, &u_ref, &z.transpose(), alpha, sigma, ymax);
        let nmf_gap = u.max_abs_diff(&u_ref).max(v.max_abs_diff(&v_ref));

        // Completion: prox-linear steps with nuclear-norm shrinkage.
        let truth = rng.normal_matrix(m, n);
        let pattern = sample_mask(m, n, 0.6, case).unwrap();
        let eta = 0.2 + rng.uniform();
        let mcp = McProblem::from_dense(&truth, pattern.clone(), r, eta).unwrap();
        let params = proxlin(alpha);
        let x = rng.normal_matrix(m, r);
        let y = rng.normal_matrix(n, r);
        let u = mc_update_x(&mcp, &x, &y, mu).unwrap();
        let v = mc_update_y(&mcp, &params, &x, &u, &y, sigma).unwrap();
        let p = product(&x, &y);
        let mut z = p.clone();
        for &(i, j) in pattern.entries() {
            z.set(i, j, (1.0 - w) * p.get(i, j) + w * truth.get(i, j));
        }
        let gx = from_na(&(to_na(&diff(&p, &z)) * to_na(&y)));
        let u_ref = shrink_ref(&DenseMatrix::from_fn(m, r, |i, j| x.get(i, j) - alpha / mu * gx.get(i, j)), eta / (2.0 * mu));
        let gy = from_na(&(to_na(&diff(&product(&u, &y), &z)).transpose() * to_na(&u)));
        let v_ref =
            shrink_ref(&DenseMatrix::from_fn(n, r, |i, j| y.get(i, j) - alpha / sigma * gy.get(i, j)), eta / (2.0 * sigma));
        let mc_gap = u.max_abs_diff(&u_ref).max(v.max_abs_diff(&v_ref));

        ensure(nmf_gap <= 1e-10 && mc_gap <= 1e-10, || {
            format!("case {case} ({m}x{n}, r {r}, alpha {alpha}): nmf gap {nmf_gap:e}, mc gap {mc_gap:e}")
        })?;
        worst = worst.max(nmf_gap).max(mc_gap);
    }
    Ok(format!("50 NMF and 50 completion steps, worst entry gap {worst:.1e}"))
}

/// Column-wise exact minimization of
/// `alpha/2 ||A B^T - Z||^2 + step/2 ||A - anchor||^2` over `0 <= A <= upper`.
fn hier_reference(anchor: &DenseMatrix, partner: &DenseMatrix, z: &DenseMatrix, alpha: f64, step: f64, upper: f64) -> DenseMatrix {
    let mut a = anchor.clone();
    for i in 0..anchor.cols() {
        let b_i = partner.column(i);
        let norm_sq: f64 = b_i.iter().map(|v| v * v).sum();
        for row in 0..anchor.rows() {
            // Residual row of Z minus every other rank-one term.
            let mut dot = 0.0;
            for (col, b) in b_i.iter().enumerate() {
                let others: f64 = (0..anchor.cols()).filter(|&j| j != i).map(|j| a.get(row, j) * partner.get(col, j)).sum();
                dot += (z.get(row, col) - others) * b;
            }
            let val = (alpha * dot + step * anchor.get(row, i)) / (alpha * norm_sq + step);
            a.set(row, i, val.clamp(0.0, upper));
        }
    }
    a
}

// 7
fn nmf_recovery() -> Outcome {
    let mut notes = Vec::new();
    for seed in 1..=5u64 {
        let (_, _, data) = planted(50, 40, 5, seed, true);
        let prob = NmfProblem::new(data.clone(), 5).unwrap();
        let (x0, y0) = init_nmf(50, 40, 5, data.fro_norm(), seed);
        let start = Instant::now();
        let (sol, _) = nmf::solve_naum(&prob, &hier(0.6), &StopOptions::fixed_iterations(2000), &x0, &y0).unwrap();
        let elapsed = start.elapsed();
        let relerr = diff(&product(&sol.x, &sol.y), &data).fro_norm() / data.fro_norm();
        let target = 0.5 * (1e-3 * data.fro_norm()).powi(2);
        let first = sol.trace.records.iter().find(|r| r.objective <= target).map(|r| r.k);
        ensure(relerr <= 1e-3 && elapsed < Duration::from_secs(5), || {
            format!("seed {seed}: relerr {relerr:.3e} in {elapsed:?}")
        })?;
        notes.push(first.map_or("-".into(), |k| k.to_string()));
    }
    Ok(format!("5 seeds, relerr <= 1e-3 first reached at iterations [{}]", notes.join(", ")))
}

// 8
fn mc_recovery() -> Outcome {
    let mut errs = Vec::new();
    for seed in 1..=3u64 {
        let (_, _, truth) = planted(100, 80, 5, seed, false);
        let pattern = sample_mask(100, 80, 0.5, seed).unwrap();
        let obs = observed(&pattern, &truth);
        let eta = 1e-3 * obs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let prob = McProblem::new(pattern, obs, 5, eta).unwrap();
        let (x0, y0) = init_mc(100, 80, 5, seed);
        let opts = StopOptions {
            max_iters: 3000,
            ..StopOptions::default()
        };
        let start = Instant::now();
        let sol = mc::solve_naum(&prob, &proxlin(0.4), &opts, &x0, &y0).unwrap();
        let elapsed = start.elapsed();
        let rec = diff(&product(&sol.x, &sol.y), &truth).fro_norm() / truth.fro_norm();
        let lib = recovery_error(&sol.x, &sol.y, &truth).unwrap();
        ensure((rec - lib).abs() <= 1e-12, || format!("seed {seed}: RecErr {lib:e} vs reference {rec:e}"))?;
        ensure(rec <= 5e-2 && elapsed < Duration::from_secs(20), || {
            format!("seed {seed}: RecErr {rec:.3e} after {} iterations in {elapsed:?}", sol.trace.iterations())
        })?;
        errs.push(format!("{rec:.1e}@{}", sol.trace.iterations()));
    }
    Ok(format!("RecErr@iterations [{}]", errs.join(", ")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn trend_config() -> TrialConfig {
    TrialConfig {
        max_iters: 1000,
        mode: StopMode::Budget,
        ..TrialConfig::new(
            ProblemConfig::Nmf {
                source: DataSource::Synthetic {
                    m: 200,
                    n: 300,
                    planted_rank: 10,
                    noise: 0.01,
                    data_seed: None,
                },
                rank: 10,
                x_max: None,
                y_max: None,
            },
            vec![AlgorithmConfig::naum(0.6), AlgorithmConfig::naum(2.0)],
            (1..=10).collect(),
        )
    }
}

// 9
fn table_trend(report: &Report, config: &TrialConfig) -> Outcome {
    let mut iters = [Vec::new(), Vec::new()];
    for t in &report.trials {
        let (_, instance) = build_instance(&config.problem, None, t.seed).unwrap();
        let naum::harness::trials::Instance::Nmf(p) = instance else { unreachable!() };
        let target = 0.5 * 0.012f64.powi(2) * p.m_fro_sq();
        let hit = t.trace.records.iter().find(|r| r.objective <= target).map_or(1001, |r| r.k);
        let slot = if t.algorithm == "naum(alpha=0.6)" { 0 } else { 1 };
        iters[slot].push(hit as f64);
    }
    let [small, large] = iters;
    ensure(small.len() == 10 && large.len() == 10, || "expected 10 seeds per alpha".into())?;
    let (m06, m2) = (median(small), median(large));
    ensure(m06 < m2, || format!("median iterations alpha=0.6 {m06} vs alpha=2 {m2}"))?;
    Ok(format!("median iterations to relerr 1.2e-2: alpha=0.6 {m06}, alpha=2 {m2}"))
}

// 10
fn baseline_sanity() -> Outcome {
    let data = StreamRng::new(10, 10).uniform_matrix(30, 20);
    let prob = NmfProblem::new(data.clone(), 5).unwrap();
    let (x0, y0) = init_nmf(30, 20, 5, data.fro_norm(), 10);
    let sol = nmf::solve_hals(&prob, &StopOptions::fixed_iterations(200), &x0, &y0).unwrap();
    let f = objectives(&sol.trace);
    ensure(f.len() == 201, || format!("HALS ran {} sweeps", f.len() - 1))?;
    let ups = f.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(ups == 0, || format!("HALS objective rose {ups} times"))?;
    let direct = 0.5 * fro_sq(&diff(&product(&sol.x, &sol.y), &data));
    ensure((direct - f[200]).abs() <= 1e-10 * (1.0 + direct), || format!("HALS trace {:e} vs {direct:e}", f[200]))?;

    let (_, _, truth) = planted(40, 30, 3, 10, false);
    let pattern = sample_mask(40, 30, 0.5, 10).unwrap();
    let obs = observed(&pattern, &truth);
    let eta = 1e-3 * obs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let prob = McProblem::new(pattern.clone(), obs.clone(), 3, eta).unwrap();
    let (x0, y0) = init_mc(40, 30, 3, 10);
    let sol = mc::solve_palm(&prob, &StopOptions::fixed_iterations(200), &x0, &y0).unwrap();
    let g = objectives(&sol.trace);
    ensure(g.len() == 201, || format!("PALM ran {} iterations", g.len() - 1))?;
    let ups = g.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(ups == 0, || format!("PALM objective rose {ups} times"))?;
    let p = product(&sol.x, &sol.y);
    let fit: f64 = pattern.entries().iter().zip(&obs).map(|(&(i, j), b)| (p.get(i, j) - b).powi(2)).sum();
    let direct = eta / 2.0 * (nuclear_ref(&sol.x) + nuclear_ref(&sol.y)) + 0.5 * fit;
    ensure((direct - g[200]).abs() <= 1e-9 * (1.0 + direct), || format!("PALM trace {:e} vs {direct:e}", g[200]))?;
    Ok(format!("HALS {:.3e} -> {:.3e}, PALM {:.3e} -> {:.3e}", f[0], f[200], g[0], g[200]))
}

// 11
fn evolution_metric(reports: &[&Report]) -> Outcome {
    let rec = |k: usize, objective: f64, seconds: f64| IterationRecord {
        k,
        objective,
        seconds,
        mu: 1.0,
        sigma: 1.0,
        inner_iterations: 1,
        dx: 0.0,
        dy: 0.0,
    };
    let trace = Trace {
        initial_objective: 10.0,
        records: vec![rec(1, 6.0, 1.0), rec(2, 4.0, 2.0)],
        termination: Termination::MaxIterations,
        diagnostics: Diagnostics::default(),
    };
    let e = trace_curve(&trace, 2.0, &[0.0, 1.0, 2.0]);
    ensure(e == vec![1.0, 0.5, 0.25], || format!("hand example gave {e:?}"))?;

    let mut curves = 0;
    for report in reports {
        for c in &report.curves {
            ensure(c.values.windows(2).all(|w| w[1] <= w[0]), || format!("{} curve increases", c.algorithm))?;
            ensure(c.values.iter().all(|v| (0.0..=1.0).contains(v)), || format!("{} curve leaves [0, 1]", c.algorithm))?;
            curves += 1;
        }
        for t in &report.trials {
            ensure((0.0..=1.0).contains(&t.normalized_fval), || format!("{} normalized fval", t.algorithm))?;
        }
    }
    Ok(format!("hand example exact, {curves} harness curves monotone in [0, 1]"))
}

fn small_reports() -> Vec<Report> {
    let nmf = TrialConfig {
        max_iters: 200,
        mode: StopMode::Budget,
        ..TrialConfig::new(
            ProblemConfig::Nmf {
                source: DataSource::Synthetic {
                    m: 40,
                    n: 30,
                    planted_rank: 4,
                    noise: 0.05,
                    data_seed: Some(3),
                },
                rank: 4,
                x_max: None,
                y_max: None,
            },
            vec![AlgorithmConfig::naum(0.6), AlgorithmConfig::naum(2.0), AlgorithmConfig::Hals],
            vec![1, 2, 3],
        )
    };
    let mc = TrialConfig::new(
        ProblemConfig::Mc {
            source: DataSource::Synthetic {
                m: 40,
                n: 30,
                planted_rank: 3,
                noise: 0.0,
                data_seed: Some(5),
            },
            rank: 3,
            eta: 1e-3,
            eta_relative: true,
            sr: 0.5,
        },
        vec![AlgorithmConfig::naum(0.4), AlgorithmConfig::Palm],
        vec![1, 2],
    );
    [nmf, mc]
        .iter()
        .map(|c| run_trials_with(c, Execution::Parallel(0)).unwrap())
        .collect()
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    match &outcome {
        Ok(detail) => println!("criterion {n:>2} PASS {name}: {detail} [{elapsed:.2?}]"),
        Err(detail) => println!("criterion {n:>2} FAIL {name}: {detail} [{elapsed:.2?}]"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut ok = true;
    ok &= run(1, "potential identity", potential_identity);
    ok &= run(2, "parameter derivation", parameter_derivation);
    ok &= run(3, "shrinkage oracle", shrinkage_oracle);
    let runs = catch_unwind(|| synthetic_runs(500)).ok();
    let runs_ref = runs.as_deref();
    ok &= run(4, "descent assertion", || descent_assertion(runs_ref.ok_or("synthetic runs failed")?));
    ok &= run(5, "line-search bound", || line_search_bound(runs_ref.ok_or("synthetic runs failed")?));
    ok &= run(6, "implicit vs dense", implicit_vs_dense);
    ok &= run(7, "synthetic NMF recovery", nmf_recovery);
    ok &= run(8, "synthetic MC recovery", mc_recovery);
    let config = trend_config();
    let trend = run_trials_with(&config, Execution::Parallel(0));
    ok &= run(9, "alpha trend", || table_trend(trend.as_ref().map_err(|e| e.to_string())?, &config));
    ok &= run(10, "baseline monotonicity", baseline_sanity);
    ok &= run(11, "E(t) metric", || {
        let small = small_reports();
        let mut all: Vec<&Report> = small.iter().collect();
        if let Ok(r) = &trend {
            all.push(r);
        }
        evolution_metric(&all)
    });
    println!("acceptance: {} in {:.2?}", if ok { "all criteria pass" } else { "FAILURES" }, start.elapsed());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
