//! Runs each solution method end to end and collects the invariant checks.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::bargmann::{build_hamiltonian, laguerre_factorization_residual, parity_conjugate, CoeffVector};
use crate::error::{Error, Result};
use crate::halfline::{self, SturmConfig};
use crate::kernel;
use crate::params::GribovParams;
use crate::report::{ConvergenceEntry, InvariantResult, Method, ReportEigenvalue, SpectralReport};
use crate::shooting::{scan_brackets, shoot_eigenvalue, ShootingConfig};
use crate::spectrum::{
    completeness_residual, convergence_study, eigen_spectrum, lower_bound_check, max_off_diagonal, parity_gram, reality_defect,
    biorthogonality_matrix, Precision, SpectralTolerances,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub jacobi_trunc: usize,
    pub sturm: SturmConfig,
    pub shooting: ShootingConfig,
    /// Panels of 32 nodes on the coarse Nystrom grid; the check grid has twice as many.
    pub kernel_panels: usize,
    pub kernel_y_max: Option<f64>,
    pub tol: SpectralTolerances,
    /// Node-doubling stability required of Nystrom eigenvalues.
    pub kernel_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 3,
            jacobi_trunc: 512,
            sturm: SturmConfig::default(),
            shooting: ShootingConfig::default(),
            kernel_panels: 2,
            kernel_y_max: None,
            tol: SpectralTolerances::default(),
            kernel_tol: 1e-4,
        }
    }
}

fn pair(s: Complex64) -> [f64; 2] {
    [s.re, s.im]
}

fn real_row(n: f64, v: &[f64]) -> ConvergenceEntry {
    ConvergenceEntry { n, sigmas: v.iter().map(|x| [*x, 0.0]).collect() }
}

pub fn run_method(method: Method, params: &GribovParams, cfg: &PipelineConfig) -> Result<SpectralReport> {
    match method {
        Method::Jacobi => run_jacobi(params, cfg),
        Method::Shooting => run_shooting(params, cfg),
        Method::Sturm => run_sturm(params, cfg),
        Method::Kernel => run_kernel(params, cfg),
    }
}

/// Truncated matrix at `N/4`, `N/2`, `N`; eigenvalues flagged converged when the
/// last two orders agree to `tol_converged` and the residual is accepted.
pub fn run_jacobi(params: &GribovParams, cfg: &PipelineConfig) -> Result<SpectralReport> {
    let n = cfg.jacobi_trunc;
    if n < cfg.k + 2 {
        return Err(Error::InvalidTruncation { got: n, min: cfg.k + 2 });
    }
    let mut list: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&m| m >= cfg.k + 2).collect();
    list.dedup();
    let study = convergence_study(params, &list, cfg.k, &cfg.tol)?;
    let op = build_hamiltonian(params, n)?;
    let pairs = eigen_spectrum(&op, cfg.k)?;
    let single = list.len() == 1;
    let eigenvalues = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let accepted = p.residual <= cfg.tol.tol_eig * p.sigma.norm().max(1.0);
            let conv = if single { params.lambda == 0.0 } else { study.converged.get(i).copied().unwrap_or(false) };
            ReportEigenvalue { re: p.sigma.re, im: p.sigma.im, residual: p.residual, converged: accepted && conv }
        })
        .collect();
    let table = study.rows.iter().map(|r| ConvergenceEntry { n: r.trunc as f64, sigmas: r.sigmas.iter().map(|s| pair(*s)).collect() }).collect();
    Ok(SpectralReport::new(Method::Jacobi, params, json!({ "N": n }), eigenvalues, table))
}

/// Scans the growth indicator from `mu/2` upward until `k` sign changes are found,
/// refines each, and repeats with the endpoint moved out by 2.
pub fn run_shooting(params: &GribovParams, cfg: &PipelineConfig) -> Result<SpectralReport> {
    params.require_positive()?;
    let sc = cfg.shooting;
    let rho = params.rho()?;
    let y0 = sc.endpoint(rho);
    let step = 0.25 * params.mu;
    let lo = 0.5 * params.mu;
    let mut hi = params.mu * (cfg.k as f64 + 1.0);
    let brackets = loop {
        let steps = ((hi - lo) / step).ceil() as usize;
        let b = scan_brackets(params, lo, hi, steps, &sc)?;
        if b.len() >= cfg.k {
            break b;
        }
        if hi > 1e3 * params.mu * (cfg.k as f64 + 1.0) {
            return Err(Error::NoConvergence(format!("found only {} sign changes of the growth indicator below {hi}", b.len())));
        }
        hi *= 2.0;
    };
    let far = ShootingConfig { y_max: Some(y0 + 2.0), ..sc };
    let mut eigenvalues = Vec::with_capacity(cfg.k);
    let (mut near_row, mut far_row) = (Vec::new(), Vec::new());
    for br in brackets.into_iter().take(cfg.k) {
        let a = shoot_eigenvalue(params, [br.0, br.1], &sc)?;
        let b = shoot_eigenvalue(params, [br.0, br.1], &far)?;
        let stable = (a.sigma - b.sigma).abs() <= cfg.tol.tol_converged * a.sigma.abs().max(1.0);
        eigenvalues.push(ReportEigenvalue { re: a.sigma, im: 0.0, residual: a.indicator_at_root.abs(), converged: a.converged && b.converged && stable });
        near_row.push(a.sigma);
        far_row.push(b.sigma);
    }
    let meta = json!({ "eps": sc.eps, "series_terms": sc.series_terms, "y_max": y0, "rtol": sc.rtol });
    Ok(SpectralReport::new(Method::Shooting, params, meta, eigenvalues, vec![real_row(y0, &near_row), real_row(y0 + 2.0, &far_row)]))
}

/// Extrapolated finite differences; an eigenvalue is converged when its last
/// two extrapolations agree to the configured shift tolerance.
pub fn run_sturm(params: &GribovParams, cfg: &PipelineConfig) -> Result<SpectralReport> {
    let r = halfline::solve(params, cfg.k, &cfg.sturm)?;
    let prev = r.history.iter().rev().nth(1).map(|h| h.1.clone());
    let eigenvalues = r
        .extrapolated
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let conv = prev.as_ref().is_some_and(|p| (p[i] - s).abs() <= cfg.sturm.shift_tol * s.abs().max(1.0));
            ReportEigenvalue { re: s, im: 0.0, residual: (s - r.fine[i]).abs(), converged: conv }
        })
        .collect();
    let table = r.history.iter().map(|(m, v)| real_row(*m as f64, v)).collect();
    let meta = json!({ "x_max": r.x_max, "m": r.m, "h": r.x_max / (r.m as f64 + 1.0) });
    Ok(SpectralReport::new(Method::Sturm, params, meta, eigenvalues, table))
}

/// Nystrom on `P` and `2P` panels; reports the finer grid.
pub fn run_kernel(params: &GribovParams, cfg: &PipelineConfig) -> Result<SpectralReport> {
    params.require_positive()?;
    let y_max = cfg.kernel_y_max.unwrap_or(kernel::default_y_max(params.rho()?));
    let coarse_grid = kernel::positive_grid(params, y_max, cfg.kernel_panels)?;
    let fine_grid = kernel::positive_grid(params, y_max, 2 * cfg.kernel_panels)?;
    let coarse = kernel::nystrom_spectrum(params, &coarse_grid, cfg.k)?;
    let fine = kernel::nystrom_spectrum(params, &fine_grid, cfg.k)?;
    let eigenvalues = fine
        .sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let d = coarse.sigmas.get(i).map_or(f64::INFINITY, |c| (c - s).abs());
            ReportEigenvalue { re: s, im: 0.0, residual: d, converged: d <= cfg.kernel_tol * s.abs() }
        })
        .collect();
    let meta = json!({ "y_max": y_max, "nodes": fine.nodes });
    let table = vec![real_row(coarse.nodes as f64, &coarse.sigmas), real_row(fine.nodes as f64, &fine.sigmas)];
    Ok(SpectralReport::new(Method::Kernel, params, meta, eigenvalues, table))
}

fn guarded(name: &str, f: impl FnOnce() -> Result<InvariantResult>) -> InvariantResult {
    f().unwrap_or_else(|e| InvariantResult::failed(name, e.to_string()))
}

/// Structure identities, reality, lower bound, biorthogonality, completeness and
/// kernel positivity at the given parameters.
pub fn invariant_suite(params: &GribovParams, cfg: &PipelineConfig) -> Vec<InvariantResult> {
    let tol = cfg.tol;
    let mut out = Vec::new();
    out.push(guarded("symmetry", || {
        let op = build_hamiltonian(params, 64)?;
        Ok(InvariantResult::at_most("symmetry", if op.is_symmetric() { 0.0 } else { 1.0 }, 0.0))
    }));
    out.push(guarded("parity", || {
        let a = parity_conjugate(&build_hamiltonian(params, 64)?).to_dense();
        let b = build_hamiltonian(&params.with_lambda(-params.lambda)?, 64)?.to_dense();
        Ok(InvariantResult::at_most("parity", (a - b).camax(), 0.0))
    }));
    out.push(guarded("laguerre_factorization", || Ok(InvariantResult::at_most("laguerre_factorization", laguerre_factorization_residual(params, 64)?, 1e-12))));

    let n = 256;
    let k = 40.min(n - 2);
    let spectral = (|| -> Result<_> {
        let op = build_hamiltonian(params, n)?;
        let pairs = eigen_spectrum(&op, k)?;
        let study = convergence_study(params, &[n, 2 * n], k, &tol)?;
        Ok((op, pairs, study))
    })();
    match spectral {
        Err(e) => out.push(InvariantResult::failed("jacobi_spectrum", e.to_string())),
        Ok((op, pairs, study)) => {
            let sig: Vec<Complex64> = pairs.iter().map(|p| p.sigma).collect();
            let conv = study.converged.clone();
            out.push(InvariantResult::at_most("reality", reality_defect(&sig, &conv), tol.tol_real));
            if params.mu > 0.0 {
                out.push(guarded("lower_bound", || {
                    let r = lower_bound_check(&sig, &conv, params, tol.tol_real)?;
                    Ok(InvariantResult::at_most("lower_bound", (-r.margin).max(0.0), tol.tol_real))
                }));
            }
            // eigenvectors whose eigenvalue is stable to 5 digits under N -> 2N
            let first: Vec<_> = pairs.iter().zip(&study.digits).filter(|(_, d)| **d >= 5.0).map(|(p, _)| p.clone()).take(8).collect();
            let b = max_off_diagonal(&biorthogonality_matrix(&first), &first, tol.gap_rel);
            out.push(InvariantResult::at_most("biorthogonality", b, tol.tol_ortho).with_note(format!("{} eigenvectors stable to 5 digits", first.len())));
            let pg = max_off_diagonal(&parity_gram(&first), &first, tol.gap_rel);
            out.push(InvariantResult::at_most("parity_gram", pg, tol.tol_ortho));
            out.push(guarded("completeness", || {
                let mut t = CoeffVector::basis(n, 1);
                t.coeffs[2] = Complex64::new(1.0, 0.0);
                let r = completeness_residual(&op, &pairs, &t, Precision::DoubleDouble)?;
                Ok(InvariantResult::at_most("completeness", r.best, 1e-6).with_note(format!("best at k = {}", r.best_k)))
            }));
        }
    }

    if params.mu > 0.0 && params.lambda > 0.0 {
        out.push(guarded("kernel_positivity", || {
            let y_max = cfg.kernel_y_max.unwrap_or(kernel::default_y_max(params.rho()?));
            let grid = kernel::positive_grid(params, y_max, cfg.kernel_panels)?;
            let neg = grid.kernel.iter().filter(|v| **v < 0.0).count();
            let s = kernel::nystrom_spectrum(params, &grid, 1)?;
            let r = InvariantResult::at_most("kernel_positivity", neg as f64, 0.0);
            Ok(if s.separation < 1.0 { r.with_note(format!("leading eigenvalue separation {:.3}", s.separation)) } else {
                InvariantResult::failed("kernel_positivity", format!("leading eigenvalue not separated ({})", s.separation))
            })
        }));
        out.push(guarded("negative_kernel_sign", || {
            let grid = kernel::negative_grid(params, 8.0, 1, 10)?;
            let bad = grid.kernel.iter().filter(|v| **v > 0.0).count();
            let mut dom = 0usize;
            for (i, &y) in grid.nodes.iter().enumerate() {
                for (j, &s) in grid.nodes.iter().enumerate() {
                    if grid.at(i, j).abs() > kernel::dominating_kernel(params, y, s)? {
                        dom += 1;
                    }
                }
            }
            Ok(InvariantResult::at_most("negative_kernel_sign", (bad + dom) as f64, 0.0))
        }));
    }
    out
}
