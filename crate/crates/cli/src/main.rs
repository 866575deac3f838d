use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use naum::engine::StopOptions;
use naum::harness::{init_mc, init_nmf, load_matrix, run_trials_with, LoadedMatrix, MatrixFormat, TrialConfig};
use naum::mc::{self, recovery_error, sample_mask, McProblem};
use naum::model::{derive_params, ParamOverrides, Scheme};
use naum::nmf::{self, NmfData, NmfProblem};
use naum::par::Execution;
use naum::verify;
use serde_json::json;

#[derive(Parser)]
#[command(name = "naum", version, about = "Nonmonotone alternating updating solvers for matrix factorization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One NAUM solve of box-constrained NMF.
    Nmf(NmfArgs),
    /// One NAUM solve of nuclear-norm matrix completion on a sampled mask.
    Mc(McArgs),
    /// Run a trial batch described by a JSON config.
    Bench(BenchArgs),
    /// Run the self-check suites.
    Verify(VerifyArgs),
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not finite")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    finite(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err(format!("{v} is not positive")) })
}

fn scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: naum::NaumError| e.to_string())
}

fn format(s: &str) -> std::result::Result<MatrixFormat, String> {
    s.parse().map_err(|e: naum::NaumError| e.to_string())
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// dense-csv, dense-binary or sparse-coordinate; inferred from the extension when omitted.
    #[arg(long, value_parser = format)]
    format: Option<MatrixFormat>,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, value_parser = positive)]
    max_seconds: Option<f64>,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    tol_obj: f64,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    tol_change: f64,
    #[arg(long, value_parser = scheme)]
    scheme_x: Option<Scheme>,
    #[arg(long, value_parser = scheme)]
    scheme_y: Option<Scheme>,
    /// Trace CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn load(&self) -> Result<LoadedMatrix> {
        let format = match self.format {
            Some(f) => f,
            None => MatrixFormat::from_extension(&self.input).with_context(|| {
                format!("cannot infer the format of {}; pass --format", self.input.display())
            })?,
        };
        Ok(load_matrix(&self.input, format)?)
    }

    fn stop(&self) -> StopOptions {
        StopOptions {
            max_iters: self.max_iters,
            max_seconds: self.max_seconds,
            tol_obj: Some(self.tol_obj),
            tol_change: Some(self.tol_change),
            ..StopOptions::default()
        }
    }

    fn overrides(&self, default: Scheme) -> ParamOverrides {
        ParamOverrides {
            scheme_x: Some(self.scheme_x.unwrap_or(default)),
            scheme_y: Some(self.scheme_y.unwrap_or(default)),
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct NmfArgs {
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value_t = 0.6, value_parser = finite)]
    alpha: f64,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value_t = 0.4, value_parser = finite)]
    alpha: f64,
    /// Nuclear-norm weight.
    #[arg(long, value_parser = positive)]
    eta: f64,
    /// Sampling ratio of the observation mask.
    #[arg(long, value_parser = positive)]
    sr: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON trial config.
    #[arg(long)]
    input: PathBuf,
    /// Report path; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Worker threads for the case batches; sequential by default.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn write_trace(path: &Path, csv: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, csv).with_context(|| format!("writing {}", path.display()))
}

fn run_nmf(args: &NmfArgs) -> Result<()> {
    let s = &args.solve;
    let data: NmfData = match s.load()? {
        LoadedMatrix::Dense(d) => d.into(),
        LoadedMatrix::Sparse(c) => c.into(),
    };
    let problem = NmfProblem::new(data, s.rank)?;
    let params = derive_params(args.alpha, &s.overrides(Scheme::HierarchicalProx))?;
    let (x0, y0) = init_nmf(problem.m(), problem.n(), s.rank, problem.m_fro_sq().sqrt(), s.seed);
    let (sol, _) = nmf::solve_naum(&problem, &params, &s.stop(), &x0, &y0)?;
    let out = s.out.clone().unwrap_or_else(|| PathBuf::from("trace.csv"));
    write_trace(&out, &sol.trace.to_csv())?;
    let record = json!({
        "algorithm": format!("naum(alpha={})", args.alpha),
        "seed": s.seed,
        "iterations": sol.trace.iterations(),
        "seconds": sol.trace.elapsed(),
        "objective": sol.trace.final_objective(),
        "relerr": problem.relative_error(&sol.x, &sol.y)?,
        "termination": sol.trace.termination,
        "trace": out,
    });
    println!("{record}");
    Ok(())
}

fn run_mc(args: &McArgs) -> Result<()> {
    let s = &args.solve;
    if args.sr > 1.0 {
        bail!("--sr must lie in (0, 1], got {}", args.sr);
    }
    let truth = s.load()?.into_dense();
    let pattern = sample_mask(truth.rows(), truth.cols(), args.sr, s.seed)?;
    let observed = pattern.gather(&truth);
    let problem = McProblem::new(pattern, observed, s.rank, args.eta)?;
    let params = derive_params(args.alpha, &s.overrides(Scheme::ProxLinear))?;
    let (x0, y0) = init_mc(problem.m(), problem.n(), s.rank, s.seed);
    let sol = mc::solve_naum(&problem, &params, &s.stop(), &x0, &y0)?;
    if let Some(out) = &s.out {
        write_trace(out, &sol.trace.to_csv())?;
    }
    let record = json!({
        "algorithm": format!("naum(alpha={})", args.alpha),
        "seed": s.seed,
        "eta": args.eta,
        "sr": args.sr,
        "iterations": sol.trace.iterations(),
        "seconds": sol.trace.elapsed(),
        "fval": sol.trace.final_objective(),
        "rec_err": recovery_error(&sol.x, &sol.y, &truth)?,
        "termination": sol.trace.termination,
    });
    println!("{record}");
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let mut config = TrialConfig::load(&args.input)?;
    if args.jobs.is_some() {
        config.jobs = args.jobs;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    let exec = Execution::from_jobs(config.jobs);
    info!("bench with {exec:?}");
    let report = run_trials_with(&config, exec)?;
    if let Some(out) = &config.output {
        let written = report.write_files(out)?;
        info!("wrote {} files", written.len());
    }
    for s in &report.summaries {
        println!("{}", serde_json::to_string(s)?);
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let exec = Execution::from_jobs(Some(args.jobs));
    let suites = verify::run_all(exec);
    let mut all = true;
    for s in &suites {
        let status = if s.ok() { "PASS" } else { "FAIL" };
        println!("{status} {} passed={} failed={}", s.name, s.passed, s.failed);
        if let Some(d) = &s.detail {
            println!("  first failure: {d}");
        }
        all &= s.ok();
    }
    Ok(all)
}

/// The error chain, skipping causes that the outer message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Nmf(a) => run_nmf(a).map(|_| true),
        Command::Mc(a) => run_mc(a).map(|_| true),
        Command::Bench(a) => run_bench(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
