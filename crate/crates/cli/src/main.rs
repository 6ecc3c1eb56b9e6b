//! `gribov`: run the spectral pipelines and write reports.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gribov_core::heun::{axis_series, frobenius_coefficients};
use gribov_core::pipeline::{invariant_suite, run_method, run_shooting};
use gribov_core::report::{compare, ComparisonReport, InvariantResult, Method, SpectralReport};
use gribov_core::shooting::{ray_samples, ray_samples_csv, ShootingResult};
use gribov_core::{kernel, Complex64, Error};
use rayon::prelude::*;
use serde::Serialize;

use config::{Format, RunArgs, RunConfig};

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "gribov", version, about = "Spectral toolkit for the Gribov reggeon Hamiltonian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues from the selected methods plus a comparison report
    Spectrum(RunArgs),
    /// Frobenius coefficients and axis samples at one eigenvalue
    Series {
        #[command(flatten)]
        run: RunArgs,
        /// Spectral parameter; defaults to the lowest eigenvalue found by shooting
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 20)]
        terms: usize,
    },
    /// Inverse-kernel matrix, Nystrom spectrum and Hilbert-Schmidt estimate
    Kernel {
        #[command(flatten)]
        run: RunArgs,
        /// Skip the Hilbert-Schmidt estimate on the negative axis
        #[arg(long)]
        no_hs: bool,
    },
    /// All methods, cross-comparison and the invariant suite
    Validate(RunArgs),
    /// Compare existing report files
    Report {
        /// Report JSON files; defaults to <out>/<method>.json for every method present
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "gribov-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol_compare: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol_kernel: f64,
    },
}

#[derive(Serialize)]
struct ErrorRecord {
    kind: &'static str,
    message: String,
    exit_code: u8,
}

fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::InvalidTruncation { .. } => ("invalid_truncation", EXIT_CONFIG),
        Error::DimensionMismatch { .. } => ("dimension_mismatch", EXIT_CONFIG),
        Error::Parameter(_) => ("parameter", EXIT_CONFIG),
        Error::Domain(_) => ("domain", EXIT_CONFIG),
        Error::Logarithmic(_) => ("logarithmic", EXIT_CONFIG),
        Error::Unsupported(_) => ("unsupported", EXIT_CONFIG),
        Error::NoRoot { .. } => ("no_root", EXIT_NONCONVERGENCE),
        Error::Stiffness { .. } => ("stiffness", EXIT_NONCONVERGENCE),
        Error::NoConvergence(_) => ("no_convergence", EXIT_NONCONVERGENCE),
        Error::DomainTruncation(_) => ("domain_truncation", EXIT_NONCONVERGENCE),
        Error::DegenerateSign { .. } => ("degenerate_sign", EXIT_INVARIANT),
        Error::Perron(_) => ("perron", EXIT_INVARIANT),
        Error::LowerBound(_) => ("lower_bound", EXIT_INVARIANT),
        Error::Divergence(_) => ("divergence", EXIT_INVARIANT),
    }
}

fn record(e: &anyhow::Error) -> ErrorRecord {
    match e.downcast_ref::<Error>() {
        Some(core) => {
            let (kind, code) = classify(core);
            ErrorRecord { kind, message: core.to_string(), exit_code: code }
        }
        None => ErrorRecord { kind: "config", message: format!("{e:#}"), exit_code: EXIT_CONFIG },
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_report(cfg: &RunConfig, r: &SpectralReport) -> anyhow::Result<()> {
    let tag = r.method.tag();
    match cfg.format {
        Format::Json => write(&cfg.out.join(format!("{tag}.json")), &r.to_json()),
        Format::Csv => {
            write(&cfg.out.join(format!("{tag}.csv")), &r.to_csv())?;
            write(&cfg.out.join(format!("{tag}_convergence.csv")), &r.convergence_csv())
        }
    }
}

fn write_comparison(cfg_out: &Path, format: Format, name: &str, c: &ComparisonReport) -> anyhow::Result<()> {
    match format {
        Format::Json => write(&cfg_out.join(format!("{name}.json")), &c.to_json()),
        Format::Csv => write(&cfg_out.join(format!("{name}.csv")), &c.to_csv()),
    }
}

/// Runs every configured method; failures are collected, not fatal.
fn run_all(cfg: &RunConfig) -> (Vec<SpectralReport>, Vec<(Method, Error)>) {
    let results: Vec<(Method, gribov_core::Result<SpectralReport>)> = cfg
        .methods
        .par_iter()
        .map(|&m| {
            let t = Instant::now();
            let r = run_method(m, &cfg.params, &cfg.pipeline).map(|mut r| {
                if cfg.wall_time {
                    r.wall_time = Some(t.elapsed().as_secs_f64());
                }
                r
            });
            (m, r)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (m, r) in results {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => failed.push((m, e)),
        }
    }
    (ok, failed)
}

fn summarize(c: &ComparisonReport) {
    for p in &c.pairs {
        println!(
            "{:>8} vs {:<8} compared {:>2}  max rel delta {:.3e}  tol {:.0e}  {}",
            p.a.tag(),
            p.b.tag(),
            p.compared,
            p.max_rel_delta,
            p.tolerance,
            if p.pass { "ok" } else { "FAIL" }
        );
    }
    for v in &c.invariants {
        let note = v.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        println!("{:>24}: {:.3e} <= {:.0e}  {}{note}", v.name, v.value, v.tolerance, if v.pass { "ok" } else { "FAIL" });
    }
}

/// Writes reports and the comparison; returns the exit status.
fn spectrum_like(cfg: &RunConfig, invariants: Vec<InvariantResult>, name: &str) -> anyhow::Result<u8> {
    prepare_out(&cfg.out)?;
    if let Some(n) = &cfg.note {
        eprintln!("note: {n}");
    }
    let (reports, failed) = run_all(cfg);
    for r in &reports {
        write_report(cfg, r)?;
        let vals: Vec<String> = r.eigenvalues.iter().map(|e| format!("{:.12}", e.re)).collect();
        println!("{:>8}: {}", r.method.tag(), vals.join(" "));
    }
    let mut code = 0;
    if !failed.is_empty() {
        let recs: Vec<serde_json::Value> = failed
            .iter()
            .map(|(m, e)| {
                let (kind, c) = classify(e);
                code = code.max(c);
                eprintln!("{}: {e}", m.tag());
                serde_json::json!({ "method": m.tag(), "kind": kind, "message": e.to_string(), "exit_code": c })
            })
            .collect();
        write(&cfg.out.join("errors.json"), &serde_json::to_string_pretty(&recs)?)?;
    }
    if reports.is_empty() {
        return Ok(code);
    }
    let c = compare(&reports, cfg.tol_compare, cfg.pipeline.kernel_tol, invariants)?;
    write_comparison(&cfg.out, cfg.format, name, &c)?;
    summarize(&c);
    if code == 0 && !c.pass {
        code = EXIT_INVARIANT;
    }
    Ok(code)
}

#[derive(Serialize)]
struct SeriesOutput {
    sigma: f64,
    frobenius: gribov_core::heun::SeriesSolution,
    /// Real coefficients of `u(y) = phi(-i y) i = y sum b_n y^n`.
    axis_coefficients: Vec<f64>,
}

fn series(cfg: &RunConfig, sigma: Option<f64>, terms: usize) -> anyhow::Result<u8> {
    prepare_out(&cfg.out)?;
    let sc = cfg.pipeline.shooting;
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let one = gribov_core::pipeline::PipelineConfig { k: 1, ..cfg.pipeline };
            run_shooting(&cfg.params, &one)?.eigenvalues[0].re
        }
    };
    let out = SeriesOutput {
        sigma,
        frobenius: frobenius_coefficients(&cfg.params, Complex64::new(sigma, 0.0), terms)?,
        axis_coefficients: axis_series(&cfg.params, sigma, terms)?,
    };
    write(&cfg.out.join("series.json"), &serde_json::to_string_pretty(&out)?)?;
    let (ray, y_res) = ray_samples(&cfg.params, sigma, &sc)?;
    let r = ShootingResult {
        sigma,
        growth_indicator: vec![],
        ray_samples: ray,
        y_resolved: y_res,
        y_max: sc.endpoint(cfg.params.rho()?),
        indicator_at_root: f64::NAN,
        converged: true,
        iterations: 0,
    };
    write(&cfg.out.join("ray_samples.csv"), &ray_samples_csv(&r))?;
    println!("sigma = {sigma:.12}, {terms} terms, ray samples up to y = {y_res:.3}");
    Ok(0)
}

fn kernel_cmd(cfg: &RunConfig, no_hs: bool) -> anyhow::Result<u8> {
    prepare_out(&cfg.out)?;
    let p = &cfg.params;
    let y_max = cfg.pipeline.kernel_y_max.unwrap_or(kernel::default_y_max(p.rho()?));
    let grid = kernel::positive_grid(p, y_max, cfg.pipeline.kernel_panels)?;
    write(&cfg.out.join("kernel_matrix.csv"), &grid.to_csv())?;
    let mut report = run_method(Method::Kernel, p, &cfg.pipeline)?;
    report.wall_time = None;
    write_report(cfg, &report)?;
    let vals: Vec<String> = report.eigenvalues.iter().map(|e| format!("{:.12}", e.re)).collect();
    println!("kernel: {}", vals.join(" "));
    let mut code = 0;
    if !no_hs {
        let hs = kernel::hs_norm_estimate(p, 8.0, 3, 1e-4)?;
        write(&cfg.out.join("hs.json"), &serde_json::to_string_pretty(&hs)?)?;
        for l in &hs.levels {
            println!("HS  Y = {:>4}  per unit {}  {:.10e}  (dominating {:.6e})", l.y_max, l.per_unit, l.value, l.dominating);
        }
        if !hs.saturated {
            code = EXIT_INVARIANT;
        }
    }
    Ok(code)
}

fn report_cmd(inputs: Vec<PathBuf>, out: PathBuf, tol: f64, tol_kernel: f64) -> anyhow::Result<u8> {
    let files: Vec<PathBuf> = if inputs.is_empty() {
        Method::ALL.iter().map(|m| out.join(format!("{}.json", m.tag()))).filter(|p| p.exists()).collect()
    } else {
        inputs
    };
    if files.is_empty() {
        anyhow::bail!("no report files found in {}", out.display());
    }
    let reports = files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            Ok(SpectralReport::from_json(&text)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let c = compare(&reports, tol, tol_kernel, vec![])?;
    prepare_out(&out)?;
    write(&out.join("comparison.json"), &c.to_json())?;
    summarize(&c);
    Ok(if c.pass { 0 } else { EXIT_INVARIANT })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Spectrum(a) => spectrum_like(&RunConfig::resolve(a)?, vec![], "comparison"),
        Command::Series { run, sigma, terms } => series(&RunConfig::resolve(run)?, sigma, terms),
        Command::Kernel { run, no_hs } => kernel_cmd(&RunConfig::resolve(run)?, no_hs),
        Command::Validate(a) => {
            let cfg = RunConfig::resolve(a)?;
            let inv = invariant_suite(&cfg.params, &cfg.pipeline);
            spectrum_like(&cfg, inv, "validate")
        }
        Command::Report { inputs, out, tol_compare, tol_kernel } => report_cmd(inputs, out, tol_compare, tol_kernel),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let rec = record(&e);
            eprintln!("{}", serde_json::to_string(&rec).unwrap_or_else(|_| rec.message.clone()));
            ExitCode::from(rec.exit_code)
        }
    }
}
