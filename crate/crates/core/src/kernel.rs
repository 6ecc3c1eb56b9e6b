//! Integral kernels inverting the Hamiltonian on the imaginary axis.
//!
//! Positive axis (`z = -i y`, `y >= 0`), with `g(u) = u^2/2 + rho u`:
//!
//! ```text
//! N(y, s) = exp(g(m) - g(s)) E(m) / (lambda s),  m = min(y, s),
//! E(m)    = int_0^m exp(g(u) - g(m)) du,
//! ```
//!
//! so that `phi(-i y) = int_0^inf N(y, s) (H phi)(-i s) ds` for `phi(0) = 0`.
//!
//! Negative axis (`y, s <= 0`, `rho > 0`):
//!
//! ```text
//! K(y, s) = exp(-rho y) (theta(y)/y) (s/theta(s)) exp(s^2/2) J(min(y, s)),
//! J(m)    = int_{-inf}^m exp(-(u - rho)^2/2) / u du.
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::GribovParams;
use crate::quad::{adaptive_gk, composite_gauss, gauss_legendre, map_rule, Rule};

const PANEL_NODES: usize = 32;

/// `theta(y) = y` on `[-1, 0]`, `-1` below.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct WeightTheta;

impl WeightTheta {
    pub fn eval(&self, y: f64) -> f64 {
        if y >= -1.0 {
            y
        } else {
            -1.0
        }
    }

    /// Density of the measure used for the negative-axis Hilbert-Schmidt norm.
    pub fn abs(&self, y: f64) -> f64 {
        self.eval(y).abs()
    }

    /// `theta(y) / y`, equal to 1 on `[-1, 0)` and at `y = 0`.
    pub fn ratio(&self, y: f64) -> f64 {
        if y >= -1.0 {
            1.0
        } else {
            -1.0 / y
        }
    }
}

fn g(rho: f64, u: f64) -> f64 {
    0.5 * u * u + rho * u
}

/// `E(m) = int_0^m exp(g(u) - g(m)) du`.
pub fn scaled_inner_integral(rho: f64, m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    if m < 1e-6 {
        return m * (1.0 - 0.5 * rho * m);
    }
    let gm = g(rho, m);
    adaptive_gk(|u| (g(rho, u) - gm).exp(), 0.0, m, 1e-12, 1e-300, 2000).value
}

/// Kernel of the inverse on the positive axis.
pub fn kernel_positive_axis(params: &GribovParams, y: f64, s: f64) -> Result<f64> {
    params.require_positive()?;
    if !(y >= 0.0 && s >= 0.0) {
        return Err(Error::Domain(format!("positive-axis kernel needs y, s >= 0 (got {y}, {s})")));
    }
    let rho = params.rho()?;
    Ok(positive_unchecked(rho, params.lambda, y, s, None))
}

fn positive_unchecked(rho: f64, lam: f64, y: f64, s: f64, e_at_y: Option<f64>) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if s == 0.0 {
        return 1.0 / lam;
    }
    let m = y.min(s);
    let e = match e_at_y {
        Some(v) if m == y => v,
        _ => scaled_inner_integral(rho, m),
    };
    if s < 1e-6 && m == s {
        return e / s / lam;
    }
    (g(rho, m) - g(rho, s)).exp() * e / (lam * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    Positive,
    Negative,
}

/// Quadrature nodes and a sampled kernel matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelGrid {
    pub axis: Axis,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<f64>,
    /// Row-major `K(y_i, s_j)`.
    pub kernel: Vec<f64>,
    /// `theta(y_i)` on the negative axis.
    pub theta: Option<Vec<f64>>,
}

impl KernelGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,s,weight,kernel\n");
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                out.push_str(&format!("{},{},{},{}\n", self.nodes[i], self.nodes[j], self.weights[j], self.at(i, j)));
            }
        }
        out
    }
}

/// Default right end of the positive axis grid.
pub fn default_y_max(rho: f64) -> f64 {
    8f64.max(rho + 6.0)
}

/// Positive-axis grid: `panels` equal panels on `[0, y_max]`, 32 Gauss nodes each.
pub fn positive_grid(params: &GribovParams, y_max: f64, panels: usize) -> Result<KernelGrid> {
    params.require_positive()?;
    if panels == 0 || !(y_max > 0.0) {
        return Err(Error::Parameter(format!("grid needs panels >= 1 and y_max > 0 (got {panels}, {y_max})")));
    }
    let rho = params.rho()?;
    let lam = params.lambda;
    let edges: Vec<f64> = (0..=panels).map(|p| y_max * p as f64 / panels as f64).collect();
    let rule = composite_gauss(&edges, PANEL_NODES);
    let n = rule.nodes.len();
    let e_nodes: Vec<f64> = rule.nodes.par_iter().map(|&x| scaled_inner_integral(rho, x)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = rule.nodes[i];
            (0..n)
                .map(|j| {
                    let s = rule.nodes[j];
                    let m_node = if s < y { j } else { i };
                    (g(rho, rule.nodes[m_node]) - g(rho, s)).exp() * e_nodes[m_node] / (lam * s)
                })
                .collect()
        })
        .collect();
    Ok(KernelGrid { axis: Axis::Positive, nodes: rule.nodes, weights: rule.weights, edges, kernel: rows.concat(), theta: None })
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| 1.0 / (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect()
}

/// Values `l_j(t)` of the Lagrange basis on `x`.
fn lagrange_row(x: &[f64], bw: &[f64], t: f64) -> Vec<f64> {
    if let Some(k) = x.iter().position(|&v| v == t) {
        let mut out = vec![0.0; x.len()];
        out[k] = 1.0;
        return out;
    }
    let terms: Vec<f64> = x.iter().zip(bw).map(|(xj, wj)| wj / (t - xj)).collect();
    let sum: f64 = terms.iter().sum();
    terms.iter().map(|v| v / sum).collect()
}

/// Quadrature matrix `A_{ij}` with `sum_j A_{ij} f(s_j) ~ int N(y_i, s) f(s) ds`.
///
/// On the panel holding `y_i` the kernel has a derivative jump at `s = y_i`;
/// there the panel interpolant of `f` is integrated against `N(y_i, .)` with
/// separate Gauss rules on both sides of the kink.
pub fn nystrom_matrix(params: &GribovParams, grid: &KernelGrid) -> Result<DMatrix<f64>> {
    if grid.axis != Axis::Positive {
        return Err(Error::Unsupported("Nystrom matrix is built for the positive-axis kernel".into()));
    }
    let rho = params.rho()?;
    let lam = params.lambda;
    let n = grid.len();
    let (gx, gw) = gauss_legendre(PANEL_NODES);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| grid.at(i, j) * grid.weights[j]).collect();
            let p = i / PANEL_NODES;
            let (a, b) = (grid.edges[p], grid.edges[p + 1]);
            let idx = p * PANEL_NODES..(p + 1) * PANEL_NODES;
            let pn = &grid.nodes[idx.clone()];
            let bw = barycentric_weights(pn);
            let y = grid.nodes[i];
            let ey = scaled_inner_integral(rho, y);
            let mut local = vec![0.0; PANEL_NODES];
            for (lo, hi) in [(a, y), (y, b)] {
                let r = map_rule(&gx, &gw, lo, hi);
                for (t, wt) in r.nodes.iter().zip(&r.weights) {
                    let k = positive_unchecked(rho, lam, y, *t, Some(ey));
                    for (l, v) in local.iter_mut().zip(lagrange_row(pn, &bw, *t)) {
                        *l += k * wt * v;
                    }
                }
            }
            row[idx].copy_from_slice(&local);
            row
        })
        .collect();
    Ok(DMatrix::from_row_slice(n, n, &rows.concat()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseResult {
    pub y: Vec<f64>,
    pub u: Vec<Complex64>,
    /// Bound on the neglected `int_{Y}^inf` part, per node.
    pub tail_bound: Vec<f64>,
}

/// `u(y_i) = int_0^Y N(y_i, s) psi(s) ds` from samples `psi(s_j)`.
///
/// The tail beyond `Y` is bounded assuming `|psi(s)| <= |psi(Y)| (s/Y)^6` there;
/// its size relative to `|u|` must stay below `tail_tol` on nodes `y <= check_upto`.
pub fn apply_inverse(params: &GribovParams, grid: &KernelGrid, psi: &[Complex64], tail_tol: f64, check_upto: f64) -> Result<InverseResult> {
    let a = nystrom_matrix(params, grid)?;
    apply_with_matrix(params, grid, &a, psi, tail_tol, check_upto)
}

pub fn apply_with_matrix(
    params: &GribovParams,
    grid: &KernelGrid,
    a: &DMatrix<f64>,
    psi: &[Complex64],
    tail_tol: f64,
    check_upto: f64,
) -> Result<InverseResult> {
    let n = grid.len();
    if psi.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: psi.len() });
    }
    let rho = params.rho()?;
    let y_max = *grid.edges.last().expect("grid has edges");
    let u: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| psi[j] * a[(i, j)]).sum()).collect();
    let psi_end = psi[n - 1].norm() * (y_max / grid.nodes[n - 1]).powi(6);
    // int_Y^inf (s/Y)^6 exp(-(g(s) - g(Y))) ds <= 2 / g'(Y) once Y^2 >= 12
    let tail_integral = 2.0 / (y_max + rho);
    let tail_bound: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&y| positive_unchecked(rho, params.lambda, y, y_max, None) * psi_end * tail_integral)
        .collect();
    let worst = (0..n)
        .filter(|&i| grid.nodes[i] <= check_upto)
        .map(|i| tail_bound[i] / u[i].norm().max(1e-300))
        .fold(0.0, f64::max);
    if worst > tail_tol {
        return Err(Error::DomainTruncation(format!("inverse tail bound {worst:e} exceeds {tail_tol:e}; enlarge Y")));
    }
    Ok(InverseResult { y: grid.nodes.clone(), u, tail_bound })
}

/// Pointwise `u(y) = int_0^Y N(y, s) psi(s) ds` by adaptive quadrature split at `y`.
pub fn inverse_at(params: &GribovParams, y: f64, y_max: f64, psi: impl Fn(f64) -> Complex64) -> Result<Complex64> {
    params.require_positive()?;
    let rho = params.rho()?;
    let lam = params.lambda;
    let ey = scaled_inner_integral(rho, y);
    let part = |lo: f64, hi: f64, re: bool| {
        adaptive_gk(
            |s| {
                let v = psi(s) * positive_unchecked(rho, lam, y, s, Some(ey));
                if re {
                    v.re
                } else {
                    v.im
                }
            },
            lo,
            hi,
            1e-12,
            1e-300,
            2000,
        )
        .value
    };
    let hi = y_max.max(y);
    Ok(Complex64::new(part(0.0, y, true) + part(y, hi, true), part(0.0, y, false) + part(y, hi, false)))
}

/// `J(m) = exp(-(m - rho)^2/2) * hat_j(m)` with
/// `hat_j(m) = int_0^inf exp(-t^2/2 + t (m - rho)) / (m - t) dt`, `m < 0`.
pub fn scaled_tail_integral(rho: f64, m: f64) -> f64 {
    let a = rho - m;
    let t_max = -a + (a * a + 2.0 * 45.0).sqrt();
    let f = |t: f64| (-0.5 * t * t - t * a).exp() / (m - t);
    let split = (-m).min(t_max);
    adaptive_gk(f, 0.0, split, 1e-12, 1e-300, 2000).value + adaptive_gk(f, split, t_max, 1e-12, 1e-300, 2000).value
}

/// `int_{-inf}^t exp(-(u - rho)^2/2) / u du` for `t < 0`.
pub fn negative_tail_integral(rho: f64, t: f64) -> f64 {
    (-0.5 * (t - rho).powi(2)).exp() * scaled_tail_integral(rho, t)
}

fn negative_prefactor(y: f64, s: f64) -> f64 {
    let th = WeightTheta;
    // (theta(y)/y) (s/theta(s))
    th.ratio(y) / th.ratio(s)
}

fn negative_exponent(rho: f64, y: f64, s: f64) -> f64 {
    let m = y.min(s);
    -rho * y + 0.5 * s * s - 0.5 * (m - rho).powi(2)
}

fn negative_unchecked(rho: f64, y: f64, s: f64, hat_j_m: Option<f64>) -> f64 {
    let m = y.min(s);
    let hj = hat_j_m.unwrap_or_else(|| scaled_tail_integral(rho, m));
    negative_exponent(rho, y, s).exp() * negative_prefactor(y, s) * hj
}

fn check_negative(params: &GribovParams, y: f64, s: f64) -> Result<f64> {
    let rho = params.rho()?;
    if !(rho > 0.0) {
        return Err(Error::Unsupported(format!("negative-axis kernel needs rho > 0 (got {rho}); the rho < 0 representation is not implemented")));
    }
    if !(y <= 0.0 && s <= 0.0) || (y == 0.0 && s == 0.0) {
        return Err(Error::Domain(format!("negative-axis kernel needs y, s <= 0, not both zero (got {y}, {s})")));
    }
    Ok(rho)
}

/// Kernel on the negative axis; non-positive for `rho > 0`.
pub fn kernel_negative_axis(params: &GribovParams, y: f64, s: f64) -> Result<f64> {
    let rho = check_negative(params, y, s)?;
    Ok(negative_unchecked(rho, y, s, None))
}

/// `exp(-rho^2/2) |theta(y)/y * s/theta(s) / (m (m - rho))|`, an entrywise bound
/// for the negative-axis kernel.
pub fn dominating_kernel(params: &GribovParams, y: f64, s: f64) -> Result<f64> {
    let rho = check_negative(params, y, s)?;
    Ok(dominating_unchecked(rho, y, s))
}

fn dominating_unchecked(rho: f64, y: f64, s: f64) -> f64 {
    let m = y.min(s);
    (-0.5 * rho * rho).exp() * (negative_prefactor(y, s) / (m * (m - rho))).abs()
}

/// Negative-axis grid on `[-y_max, 0]` with geometric grading toward 0.
pub fn negative_grid(params: &GribovParams, y_max: f64, per_unit: usize, grading: usize) -> Result<KernelGrid> {
    let rho = check_negative(params, -1.0, -1.0)?;
    let edges = negative_edges(y_max, per_unit, grading)?;
    let rule = composite_gauss(&edges, 16);
    let n = rule.nodes.len();
    let hj: Vec<f64> = rule.nodes.par_iter().map(|&m| scaled_tail_integral(rho, m)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| negative_unchecked(rho, rule.nodes[i], rule.nodes[j], Some(hj[i.min(j)]))).collect())
        .collect();
    let theta = rule.nodes.iter().map(|&y| WeightTheta.eval(y)).collect();
    Ok(KernelGrid { axis: Axis::Negative, nodes: rule.nodes, weights: rule.weights, edges, kernel: rows.concat(), theta: Some(theta) })
}

/// Panel edges on `[-y_max, 0]`: `per_unit` panels per unit length below `-1`,
/// and on `[-1, 0]` the points `-2^{-k}`, `k < grading`, each gap split into `per_unit`.
fn negative_edges(y_max: f64, per_unit: usize, grading: usize) -> Result<Vec<f64>> {
    if !(y_max >= 1.0) || per_unit == 0 || grading == 0 {
        return Err(Error::Parameter(format!("negative grid needs y_max >= 1, per_unit >= 1, grading >= 1 (got {y_max}, {per_unit}, {grading})")));
    }
    let mut edges = Vec::new();
    let outer = ((y_max - 1.0) * per_unit as f64).ceil() as usize;
    for p in 0..outer {
        edges.push(-y_max + (y_max - 1.0) * p as f64 / outer as f64);
    }
    let mut marks: Vec<f64> = (0..grading).map(|k| -(0.5f64).powi(k as i32)).collect();
    marks.push(0.0);
    for w in marks.windows(2) {
        for q in 0..per_unit {
            edges.push(w[0] + (w[1] - w[0]) * q as f64 / per_unit as f64);
        }
    }
    edges.push(0.0);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    Ok(edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsLevel {
    pub y_max: f64,
    pub per_unit: usize,
    pub nodes: usize,
    /// `int int K^2 |theta(y)| |theta(s)|`.
    pub value: f64,
    /// Same integral for the dominating kernel.
    pub dominating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsReport {
    /// Domain doublings at fixed mesh density, then one mesh doubling.
    pub levels: Vec<HsLevel>,
    /// Relative change of `value` at the last domain doubling.
    pub domain_change: f64,
    /// Relative change of `value` under the final mesh doubling.
    pub mesh_change: f64,
    pub saturated: bool,
}

/// Squared weighted Hilbert-Schmidt norm on `[-y_max, 0]^2`.
///
/// The inner integral over `s` is split at `y` (derivative jump of the kernel),
/// so both integrals see smooth integrands on each panel.
pub fn hs_norm_level(params: &GribovParams, y_max: f64, per_unit: usize) -> Result<HsLevel> {
    let rho = check_negative(params, -1.0, -1.0)?;
    let grading = 30;
    let edges = negative_edges(y_max, per_unit, grading)?;
    let q = 16;
    let rule = composite_gauss(&edges, q);
    let (gx, gw) = gauss_legendre(q);
    let hj: Vec<f64> = rule.nodes.par_iter().map(|&m| scaled_tail_integral(rho, m)).collect();
    let th = WeightTheta;
    let parts: Vec<(f64, f64)> = rule
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = i / q;
            let hj_y = hj[i];
            let term = |s: f64, hj_s: Option<f64>| {
                let hjm = if s < y { hj_s } else { Some(hj_y) };
                let k = negative_unchecked(rho, y, s, hjm);
                let d = dominating_unchecked(rho, y, s);
                let w = th.abs(s);
                (k * k * w, d * d * w)
            };
            let (mut acc, mut dom) = (0.0, 0.0);
            for j in 0..rule.nodes.len() {
                if j / q == p {
                    continue;
                }
                let (a, b) = term(rule.nodes[j], Some(hj[j]));
                acc += rule.weights[j] * a;
                dom += rule.weights[j] * b;
            }
            for (lo, hi) in [(edges[p], y), (y, edges[p + 1])] {
                let r: Rule = map_rule(&gx, &gw, lo, hi);
                for (s, w) in r.nodes.iter().zip(&r.weights) {
                    let (a, b) = term(*s, None);
                    acc += w * a;
                    dom += w * b;
                }
            }
            let wy = rule.weights[i] * th.abs(y);
            (wy * acc, wy * dom)
        })
        .collect();
    let value = parts.iter().map(|p| p.0).sum();
    let dominating = parts.iter().map(|p| p.1).sum();
    Ok(HsLevel { y_max, per_unit, nodes: rule.nodes.len(), value, dominating })
}

/// Runs `hs_norm_level` for `y_start * 2^k`, `k = 0..=doublings`, then once more
/// on the largest domain with twice the mesh density.
pub fn hs_norm_estimate(params: &GribovParams, y_start: f64, doublings: usize, tol: f64) -> Result<HsReport> {
    let mut levels = Vec::with_capacity(doublings + 2);
    let mut y = y_start;
    for _ in 0..=doublings {
        levels.push(hs_norm_level(params, y, 1)?);
        y *= 2.0;
    }
    let rel = |a: &HsLevel, b: &HsLevel| ((b.value - a.value) / b.value).abs();
    let changes: Vec<f64> = levels.windows(2).map(|w| rel(&w[0], &w[1])).collect();
    if changes.len() >= 2 && changes[changes.len() - 1] > 1e-2 && changes[changes.len() - 1] >= changes[changes.len() - 2] {
        return Err(Error::Divergence(format!("Hilbert-Schmidt estimate keeps growing with the domain (relative changes {changes:?})")));
    }
    let last = *levels.last().expect("at least one level");
    let fine = hs_norm_level(params, last.y_max, 2)?;
    let mesh_change = rel(&last, &fine);
    levels.push(fine);
    let domain_change = changes.last().copied().unwrap_or(f64::INFINITY);
    Ok(HsReport { levels, domain_change, mesh_change, saturated: domain_change <= tol && mesh_change <= tol })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NystromSpectrum {
    pub nodes: usize,
    /// Eigenvalues of the quadrature matrix, by decreasing modulus.
    pub kappas: Vec<Complex64>,
    /// `1 / kappa` for the leading `k` real positive kappas.
    pub sigmas: Vec<f64>,
    /// Perron vector on the grid nodes, max-normalized.
    pub leading_vector: Vec<f64>,
    /// `|kappa_2| / kappa_1`.
    pub separation: f64,
}

/// Eigenvalues of the (non-symmetric) Nystrom matrix of the positive-axis kernel.
pub fn nystrom_spectrum(params: &GribovParams, grid: &KernelGrid, k: usize) -> Result<NystromSpectrum> {
    let a = nystrom_matrix(params, grid)?;
    let n = a.nrows();
    let mut kappas: Vec<Complex64> = a.clone().complex_eigenvalues().iter().map(|c| Complex64::new(c.re, c.im)).collect();
    kappas.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let lead = kappas[0];
    if !(lead.re > 0.0) || lead.im.abs() > 1e-10 * lead.re {
        return Err(Error::Perron(format!("leading eigenvalue {lead} is not real positive")));
    }
    // Perron vector by power iteration from the positive cone
    let mut v = nalgebra::DVector::from_element(n, 1.0);
    for _ in 0..2000 {
        let mut w = &a * &v;
        let m = w.amax();
        w /= m;
        let diff = (&w - &v).amax();
        v = w;
        if diff < 1e-15 {
            break;
        }
    }
    let leading: Vec<f64> = v.iter().copied().collect();
    if let Some(bad) = leading.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Perron(format!("leading eigenvector not positive at node {bad} (y = {})", grid.nodes[bad])));
    }
    let separation = kappas.get(1).map_or(0.0, |c| c.norm() / lead.re);
    let sigmas = kappas
        .iter()
        .filter(|c| c.re > 0.0 && c.im.abs() <= 1e-8 * c.norm())
        .take(k)
        .map(|c| 1.0 / c.re)
        .collect();
    Ok(NystromSpectrum { nodes: n, kappas, sigmas, leading_vector: leading, separation })
}
