//! Eigenvalues by shooting along the negative imaginary axis.
//!
//! With `u(y) = i phi(-i y)` the eigenvalue equation becomes
//! `u'' = (y + rho) u' - sigma / (lambda y) u`. Start on the analytic Frobenius
//! branch (`u ~ y`) at `y = eps`, integrate to `Y`, and watch
//! `D(sigma) = exp(-Y^2/2 - rho Y) u'(Y)`: the weight cancels the growth of the
//! dominant solution, so `D` tends to the dominant amplitude and vanishes exactly
//! when `u` is the bounded (eigen) solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heun::{axis_series, axis_series_eval};
use crate::ode::{advance, OdeConfig, OdeState};
use crate::params::GribovParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingConfig {
    pub eps: f64,
    pub series_terms: usize,
    /// `None` means `max(8, rho + 6)`.
    pub y_max: Option<f64>,
    pub rtol: f64,
    pub tol_sigma: f64,
    pub max_iter: usize,
    pub n_samples: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { eps: 1e-3, series_terms: 20, y_max: None, rtol: 1e-10, tol_sigma: 1e-9, max_iter: 200, n_samples: 100 }
    }
}

impl ShootingConfig {
    pub fn endpoint(&self, rho: f64) -> f64 {
        self.y_max.unwrap_or_else(|| 8f64.max(rho + 6.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaySample {
    pub y: f64,
    pub u: f64,
    pub up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub sigma: f64,
    /// `(sigma, D(sigma))` at every evaluation of the root finder.
    pub growth_indicator: Vec<(f64, f64)>,
    /// `u`, `u'` on `[eps, y_resolved]`; beyond that the recessive solution is
    /// buried under round-off times the dominant growth.
    pub ray_samples: Vec<RaySample>,
    pub y_resolved: f64,
    pub y_max: f64,
    pub indicator_at_root: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn ode_config(cfg: &ShootingConfig) -> OdeConfig {
    OdeConfig { rtol: cfg.rtol, atol: 1e-300, h0: cfg.eps * 0.1, max_steps: 500_000, rescale_above: Some(1e100) }
}

fn start(params: &GribovParams, sigma: f64, cfg: &ShootingConfig) -> Result<OdeState<2>> {
    let b = axis_series(params, sigma, cfg.series_terms)?;
    let (u, up) = axis_series_eval(&b, cfg.eps);
    Ok(OdeState { t: cfg.eps, y: [u, up], log_scale: 0.0, accepted: 0, rejected: 0, last_h: cfg.eps * 0.1 })
}

fn rhs(params: &GribovParams, sigma: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let rho = params.mu / params.lambda;
    let s = sigma / params.lambda;
    move |y, st| [st[1], (y + rho) * st[1] - s / y * st[0]]
}

/// `D(sigma; Y)`.
pub fn growth_indicator(params: &GribovParams, sigma: f64, cfg: &ShootingConfig) -> Result<f64> {
    params.require_positive()?;
    let rho = params.rho()?;
    let y_end = cfg.endpoint(rho);
    let mut st = start(params, sigma, cfg)?;
    advance(&rhs(params, sigma), &mut st, y_end, &ode_config(cfg))?;
    let w = st.log_scale - 0.5 * y_end * y_end - rho * y_end;
    Ok(st.y[1] * w.exp())
}

/// Sign changes of `D` on a uniform grid of `steps` intervals over `[lo, hi]`.
pub fn scan_brackets(params: &GribovParams, lo: f64, hi: f64, steps: usize, cfg: &ShootingConfig) -> Result<Vec<(f64, f64)>> {
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let vals = grid.iter().map(|s| growth_indicator(params, *s, cfg)).collect::<Result<Vec<_>>>()?;
    Ok((0..steps).filter(|&i| vals[i].signum() != vals[i + 1].signum()).map(|i| (grid[i], grid[i + 1])).collect())
}

/// Ray samples of the solution started at `sigma`, up to where
/// `rtol * exp(y^2/2 + rho y)` reaches one.
pub fn ray_samples(params: &GribovParams, sigma: f64, cfg: &ShootingConfig) -> Result<(Vec<RaySample>, f64)> {
    let rho = params.rho()?;
    let y_end = cfg.endpoint(rho);
    let budget = (1.0 / cfg.rtol).ln();
    let y_res = (-rho + (rho * rho + 2.0 * budget).sqrt()).min(y_end);
    let oc = ode_config(cfg);
    let f = rhs(params, sigma);
    let mut st = start(params, sigma, cfg)?;
    let n = cfg.n_samples.max(2);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let y = cfg.eps + (y_res - cfg.eps) * i as f64 / (n - 1) as f64;
        advance(&f, &mut st, y, &oc)?;
        let s = st.log_scale.exp();
        out.push(RaySample { y, u: st.y[0] * s, up: st.y[1] * s });
    }
    Ok((out, y_res))
}

/// Root of `D` in `[lo, hi]` by the Illinois variant of regula falsi.
pub fn shoot_eigenvalue(params: &GribovParams, bracket: [f64; 2], cfg: &ShootingConfig) -> Result<ShootingResult> {
    params.require_positive()?;
    let rho = params.rho()?;
    let [mut a, mut b] = bracket;
    let mut fa = growth_indicator(params, a, cfg)?;
    let mut fb = growth_indicator(params, b, cfg)?;
    let mut trace = vec![(a, fa), (b, fb)];
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot { lo: a, hi: b });
    }
    let mut side = 0i8;
    let mut iterations = 0;
    let mut converged = false;
    let mut c = 0.5 * (a + b);
    let mut fc = f64::NAN;
    while iterations < cfg.max_iter {
        iterations += 1;
        let prev = c;
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        fc = growth_indicator(params, c, cfg)?;
        trace.push((c, fc));
        if fc == 0.0 || (c - prev).abs() <= 1e-3 * cfg.tol_sigma || (b - a).abs() <= cfg.tol_sigma {
            converged = true;
            break;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    let (ray, y_res) = ray_samples(params, c, cfg)?;
    Ok(ShootingResult {
        sigma: c,
        growth_indicator: trace,
        ray_samples: ray,
        y_resolved: y_res,
        y_max: cfg.endpoint(rho),
        indicator_at_root: fc,
        converged,
        iterations,
    })
}

/// The lowest `k` eigenvalues: scan `[mu/2, sigma_hi]` for sign changes and
/// refine each bracket.
pub fn shoot_lowest(params: &GribovParams, k: usize, sigma_hi: f64, steps: usize, cfg: &ShootingConfig) -> Result<Vec<ShootingResult>> {
    let brackets = scan_brackets(params, 0.5 * params.mu, sigma_hi, steps, cfg)?;
    brackets.into_iter().take(k).map(|br| shoot_eigenvalue(params, [br.0, br.1], cfg)).collect()
}

/// CSV columns `y,u_re,u_im,up_re,up_im` (the axis solution is real).
pub fn ray_samples_csv(r: &ShootingResult) -> String {
    let mut s = String::from("y,u_re,u_im,up_re,up_im\n");
    for p in &r.ray_samples {
        s.push_str(&format!("{},{},0,{},0\n", p.y, p.u, p.up));
    }
    s
}
