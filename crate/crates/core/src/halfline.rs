//! The eigenvalue problem as a symmetric Schroedinger operator on the half line.
//!
//! On the negative imaginary axis `u(y) = phi(-i y)`; then
//! `u = exp((y + rho)^2 / 4) v` and `y = x^2`, `v = x^{1/2} w` turn it into
//!
//! ```text
//! (lambda/4) [ -w'' + (3/4)/x^2 w + x^2 ((x^2 + rho)^2 - 2) w ] = sigma w
//! ```
//!
//! on `(0, inf)` with `w ~ x^{3/2}` at 0 and `w ~ x^{-1/2} exp(-(x^2 + rho)^2/4)`
//! at infinity. The transforms are not unitary but preserve eigenvalues.

use num_complex::Complex64;
use serde::Serialize;

use crate::bargmann::{evaluate_at, CoeffVector};
use crate::error::{Error, Result};
use crate::params::GribovParams;
use crate::tridiag::{inverse_iteration, Tridiagonal};

/// `(lambda/4) [ (3/4)/x^2 + x^2 ((x^2 + rho)^2 - 2) ]`.
pub fn potential(lambda: f64, rho: f64, x: f64) -> f64 {
    let x2 = x * x;
    0.25 * lambda * (0.75 / x2 + x2 * ((x2 + rho) * (x2 + rho) - 2.0))
}

/// Uniform Dirichlet discretization: nodes `x_i = i h`, `i = 1..M`, `h = X/(M+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfLineProblem {
    pub params: GribovParams,
    pub x_max: f64,
    pub m: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub potential: Vec<f64>,
    /// `lambda / 4`, the coefficient of `-w''`.
    pub kinetic_scale: f64,
}

/// Default cutoff `max(4, (2 sigma_max / lambda)^{1/6} + rho^{1/2} + 2)`.
pub fn default_x_max(params: &GribovParams, sigma_max: f64) -> f64 {
    let rho = params.mu / params.lambda;
    4f64.max((2.0 * sigma_max / params.lambda).powf(1.0 / 6.0) + rho.sqrt() + 2.0)
}

/// `sigma_required`, when given, must sit below `V(X)` with margin `max(10, sigma_required)`.
pub fn build_problem(params: &GribovParams, x_max: f64, m: usize, sigma_required: Option<f64>) -> Result<HalfLineProblem> {
    params.require_positive()?;
    if m < 100 {
        return Err(Error::InvalidTruncation { got: m, min: 100 });
    }
    let rho = params.rho()?;
    let lam = params.lambda;
    if let Some(s) = sigma_required {
        let vx = potential(lam, rho, x_max);
        if vx < s + s.abs().max(10.0) {
            return Err(Error::DomainTruncation(format!("V(X = {x_max}) = {vx} does not confine sigma = {s}")));
        }
    }
    let h = x_max / (m as f64 + 1.0);
    let nodes: Vec<f64> = (1..=m).map(|i| i as f64 * h).collect();
    let pot = nodes.iter().map(|x| potential(lam, rho, *x)).collect();
    Ok(HalfLineProblem { params: *params, x_max, m, h, nodes, potential: pot, kinetic_scale: 0.25 * lam })
}

impl HalfLineProblem {
    /// `(diag, off)` of the symmetric tridiagonal matrix.
    pub fn matrix(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.kinetic_scale / (self.h * self.h);
        let diag = self.potential.iter().map(|v| 2.0 * k + v).collect();
        (diag, vec![-k; self.m - 1])
    }

    /// Number of eigenvalues below `s` (LDL^T inertia).
    pub fn count_below(&self, s: f64) -> usize {
        let (d, e) = self.matrix();
        sturm_count(&d, &e, s)
    }
}

fn sturm_count(d: &[f64], e: &[f64], s: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - s;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let prev = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { q };
        q = d[i] - s - e[i - 1] * e[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k` lowest eigenvalues of the symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64], k: usize) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (0..k.min(n))
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if sturm_count(d, e, c) > j {
                    b = c;
                } else {
                    a = c;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

pub fn raw_eigenvalues(problem: &HalfLineProblem, k: usize) -> Vec<f64> {
    let (d, e) = problem.matrix();
    tridiagonal_lowest(&d, &e, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SturmResult {
    pub x_max: f64,
    /// Node count of the coarse grid; the fine grid has `2 m + 1`.
    pub m: usize,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// `(4 fine - coarse) / 3`.
    pub extrapolated: Vec<f64>,
    /// Shift of the top extrapolated eigenvalue at the last doubling.
    pub last_shift: Option<f64>,
    /// `(m, extrapolated)` for every grid visited by [`solve`].
    pub history: Vec<(usize, Vec<f64>)>,
}

/// Eigenvalues on `h` and `h/2` with Richardson extrapolation.
pub fn sturm_eigenvalues(problem: &HalfLineProblem, k: usize) -> Result<SturmResult> {
    let fine = build_problem(&problem.params, problem.x_max, 2 * problem.m + 1, None)?;
    let c = raw_eigenvalues(problem, k);
    let f = raw_eigenvalues(&fine, k);
    let x: Vec<f64> = c.iter().zip(&f).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    Ok(SturmResult { x_max: problem.x_max, m: problem.m, coarse: c, fine: f, extrapolated: x, last_shift: None, history: Vec::new() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SturmConfig {
    pub m: usize,
    /// `None` selects [`default_x_max`].
    pub x_max: Option<f64>,
    pub shift_tol: f64,
    pub max_doublings: usize,
}

impl Default for SturmConfig {
    fn default() -> Self {
        Self { m: 4000, x_max: None, shift_tol: 1e-7, max_doublings: 4 }
    }
}

/// The `k` lowest eigenvalues, doubling the grid until the top extrapolated value
/// moves by less than `shift_tol` (relative to `max(1, sigma)`).
pub fn solve(params: &GribovParams, k: usize, cfg: &SturmConfig) -> Result<SturmResult> {
    params.require_positive()?;
    let rho = params.rho()?;
    let x_max = match cfg.x_max {
        Some(x) => x,
        None => {
            let x0 = 6.0 + rho.sqrt();
            let rough = raw_eigenvalues(&build_problem(params, x0, 500, None)?, k);
            default_x_max(params, 1.5 * rough.last().copied().unwrap_or(params.mu))
        }
    };
    let mut m = cfg.m;
    let mut res = sturm_eigenvalues(&build_problem(params, x_max, m, None)?, k)?;
    let mut history = vec![(m, res.extrapolated.clone())];
    for _ in 0..cfg.max_doublings {
        m = 2 * m + 1;
        let next = sturm_eigenvalues(&build_problem(params, x_max, m, None)?, k)?;
        let top_prev = *res.extrapolated.last().unwrap_or(&0.0);
        let top = *next.extrapolated.last().unwrap_or(&0.0);
        let shift = (top - top_prev).abs() / top.abs().max(1.0);
        history.push((m, next.extrapolated.clone()));
        res = SturmResult { last_shift: Some(shift), ..next };
        if shift < cfg.shift_tol {
            break;
        }
    }
    let top = res.extrapolated.last().copied().unwrap_or(0.0);
    let vx = potential(params.lambda, rho, x_max);
    if vx < top + top.abs().max(10.0) {
        return Err(Error::DomainTruncation(format!("V(X = {x_max}) = {vx} too close to sigma = {top}")));
    }
    res.history = history;
    Ok(res)
}

/// Eigenvector for a computed eigenvalue by inverse iteration, normalized to
/// unit discrete `L^2` norm and positive near the origin.
pub fn eigenvector(problem: &HalfLineProblem, sigma: f64) -> Vec<f64> {
    let (d, e) = problem.matrix();
    let t = Tridiagonal { sub: e.clone(), diag: d, sup: e };
    let start: Vec<f64> = (0..problem.m).map(|i| 1.0 + 0.3 * ((i + 1) as f64).sin()).collect();
    let mut w = inverse_iteration(&t, sigma, &start, 3);
    let norm = (w.iter().map(|x| x * x).sum::<f64>() * problem.h).sqrt();
    let sign = if w[0] < 0.0 { -1.0 } else { 1.0 };
    for x in w.iter_mut() {
        *x *= sign / norm;
    }
    w
}

/// Maps between `phi` on the axis, `u`, `v` and `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformChain {
    pub rho: f64,
}

impl TransformChain {
    pub fn new(params: &GribovParams) -> Result<Self> {
        Ok(Self { rho: params.rho()? })
    }

    /// `u(y) = phi(-i y)`.
    pub fn phi_to_u(&self, phi: &CoeffVector, y: f64) -> Complex64 {
        evaluate_at(phi, Complex64::new(0.0, -y))
    }

    pub fn u_to_v(&self, y: f64, u: f64) -> f64 {
        u * (-0.25 * (y + self.rho).powi(2)).exp()
    }

    pub fn v_to_u(&self, y: f64, v: f64) -> f64 {
        v * (0.25 * (y + self.rho).powi(2)).exp()
    }

    /// `w(x) = x^{-1/2} v(x^2)`.
    pub fn v_to_w(&self, x: f64, v: f64) -> f64 {
        v / x.sqrt()
    }

    pub fn w_to_v(&self, x: f64, w: f64) -> f64 {
        w * x.sqrt()
    }

    /// `u(y) = exp((y + rho)^2/4) x^{1/2} w(x)` at `y = x^2`.
    pub fn w_to_u(&self, x: f64, w: f64) -> (f64, f64) {
        let y = x * x;
        (y, self.v_to_u(y, self.w_to_v(x, w)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedSample {
    pub x: f64,
    pub w: f64,
    pub y: f64,
    pub u: f64,
}

/// Applies the inverse chain to grid samples of `w`.
pub fn eigenfunction_transform(problem: &HalfLineProblem, w: &[f64]) -> Result<Vec<TransformedSample>> {
    let chain = TransformChain::new(&problem.params)?;
    if w.len() != problem.m {
        return Err(Error::DimensionMismatch { left: problem.m, right: w.len() });
    }
    Ok(problem
        .nodes
        .iter()
        .zip(w)
        .map(|(&x, &wv)| {
            let (y, u) = chain.w_to_u(x, wv);
            TransformedSample { x, w: wv, y, u }
        })
        .collect())
}

pub fn transformed_csv(samples: &[TransformedSample]) -> String {
    let mut s = String::from("x,w,y,u\n");
    for p in samples {
        s.push_str(&format!("{},{},{},{}\n", p.x, p.w, p.y, p.u));
    }
    s
}

/// Least-squares slope of `log|w|` against `log x` on the first `count` nodes.
pub fn origin_slope(problem: &HalfLineProblem, w: &[f64], count: usize) -> f64 {
    let pts: Vec<(f64, f64)> = problem.nodes.iter().zip(w).take(count).map(|(x, v)| (x.ln(), v.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub x_from: f64,
    pub x_to: f64,
    /// Spread (max - min) of `log|w| + (x^2+rho)^2/4 + log(x)/2` on the window.
    pub spread: f64,
    /// Spread of `log|w|` itself on the same window.
    pub raw_spread: f64,
}

/// Tail diagnostic on `[x_from, x_to]`.
pub fn tail_fit(problem: &HalfLineProblem, w: &[f64], x_from: f64, x_to: f64) -> TailFit {
    let rho = problem.params.mu / problem.params.lambda;
    let (mut lo, mut hi, mut rlo, mut rhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, v) in problem.nodes.iter().zip(w) {
        if *x < x_from || *x > x_to {
            continue;
        }
        let lw = v.abs().ln();
        let q = lw + 0.25 * (x * x + rho).powi(2) + 0.5 * x.ln();
        lo = lo.min(q);
        hi = hi.max(q);
        rlo = rlo.min(lw);
        rhi = rhi.max(lw);
    }
    TailFit { x_from, x_to, spread: hi - lo, raw_spread: rhi - rlo }
}
