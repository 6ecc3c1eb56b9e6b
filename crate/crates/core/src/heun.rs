//! Series solutions of the eigenvalue equation `H phi = sigma phi`, i.e.
//!
//! ```text
//! z phi'' + (z^2 - i rho z) phi' + (i sigma / lambda) phi = 0,
//! ```
//!
//! and of the bi-confluent Heun equation (BHE)
//!
//! ```text
//! x u'' + (1 + a - b x - 2 x^2) u' + ((g - a - 2) x - (d + (1 + a) b) / 2) u = 0
//! ```
//!
//! it reduces to under `z = i sqrt(2) x`.

use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::GribovParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `z^s * sum_n a_n z^n`, truncated at `trunc`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub exponent: f64,
    pub coeffs: Vec<Complex64>,
    /// `i (sigma / lambda - rho)` for the Gribov equation; the BHE `alpha` otherwise.
    pub alpha_param: Complex64,
    pub trunc: usize,
}

impl Serialize for SeriesSolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SeriesSolution", 3)?;
        st.serialize_field("exponent", &self.exponent)?;
        st.serialize_field("alpha_param", &[self.alpha_param.re, self.alpha_param.im])?;
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        st.serialize_field("coeffs", &pairs)?;
        st.end()
    }
}

impl SeriesSolution {
    /// Value and first two derivatives at `z` (principal branch for non-integer exponents).
    pub fn evaluate(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let s = self.exponent;
        let (mut f, mut df, mut d2f) = (ZERO, ZERO, ZERO);
        for (n, a) in self.coeffs.iter().enumerate() {
            let p = n as f64 + s;
            if *a == ZERO {
                continue;
            }
            f += a * pow(z, p);
            if p != 0.0 {
                df += a * p * pow(z, p - 1.0);
                if p != 1.0 {
                    d2f += a * p * (p - 1.0) * pow(z, p - 2.0);
                }
            }
        }
        (f, df, d2f)
    }
}

fn pow(z: Complex64, p: f64) -> Complex64 {
    if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        z.powi(p as i32)
    } else {
        z.powf(p)
    }
}

/// `z phi'' + (z^2 - i rho z) phi' + (i sigma / lambda) phi` at `z`.
pub fn gribov_ode_residual(params: &GribovParams, sigma: Complex64, z: Complex64, f: Complex64, df: Complex64, d2f: Complex64) -> Result<Complex64> {
    let rho = params.rho()?;
    Ok(z * d2f + (z * z - I * rho * z) * df + I * sigma / params.lambda * f)
}

/// Frobenius branch with exponent `s` at the regular singular point 0.
///
/// Coefficient recurrence from the indicial structure:
/// `(n+s)(n+s-1) a_n + (i sigma/lambda - i rho (n+s-1)) a_{n-1} + (n+s-2) a_{n-2} = 0`.
/// The indicial roots are 0 and 1. The root 0 needs a logarithm unless `sigma = 0`.
pub fn frobenius_branch(params: &GribovParams, sigma: Complex64, exponent: f64, n_terms: usize) -> Result<SeriesSolution> {
    if n_terms < 2 {
        return Err(Error::InvalidTruncation { got: n_terms, min: 2 });
    }
    let rho = params.rho()?;
    let lam = params.lambda;
    let alpha = I * (sigma / lam - rho);
    let s = exponent;
    if s != 0.0 && s != 1.0 {
        return Err(Error::Domain(format!("exponent {s} is not an indicial root (0 or 1)")));
    }
    let mut a = vec![ZERO; n_terms + 1];
    a[0] = ONE;
    for n in 1..=n_terms {
        let nf = n as f64;
        let lead = (nf + s) * (nf + s - 1.0);
        let c1 = I * sigma / lam - I * rho * (nf + s - 1.0);
        let prev2 = if n >= 2 { a[n - 2] * (nf + s - 2.0) } else { ZERO };
        let rhs = -(c1 * a[n - 1] + prev2);
        if lead == 0.0 {
            if rhs.norm() > 0.0 {
                return Err(Error::Logarithmic(format!(
                    "exponent {s}: the recurrence is singular at n = {n} with nonzero right-hand side {rhs}; \
                     the second solution carries a logarithmic term"
                )));
            }
            // free coefficient: choose zero
            a[n] = ZERO;
        } else {
            a[n] = rhs / lead;
        }
    }
    Ok(SeriesSolution { exponent: s, coeffs: a, alpha_param: alpha, trunc: n_terms })
}

/// The analytic branch `phi(z) = z * sum a_n z^n` with `a_0 = 1`.
pub fn frobenius_coefficients(params: &GribovParams, sigma: Complex64, n_terms: usize) -> Result<SeriesSolution> {
    frobenius_branch(params, sigma, 1.0, n_terms)
}

/// Largest term-by-term defect of the exponent-1 recurrence, relative to the
/// size of the terms involved.
pub fn frobenius_recurrence_defect(params: &GribovParams, sigma: Complex64, sol: &SeriesSolution) -> Result<f64> {
    let rho = params.rho()?;
    let s = sol.exponent;
    let a = &sol.coeffs;
    let mut worst = 0.0_f64;
    for n in 1..a.len() {
        let nf = n as f64;
        let t0 = a[n] * (nf + s) * (nf + s - 1.0);
        let t1 = (I * sigma / params.lambda - I * rho * (nf + s - 1.0)) * a[n - 1];
        let t2 = if n >= 2 { a[n - 2] * (nf + s - 2.0) } else { ZERO };
        let scale = t0.norm() + t1.norm() + t2.norm();
        if scale > 0.0 {
            worst = worst.max((t0 + t1 + t2).norm() / scale);
        }
    }
    Ok(worst)
}

/// Real coefficients of `u(y) = phi(-i y) * i = sum b_n y^{n+1}` on the negative
/// imaginary axis, `b_0 = 1`:
/// `b_{n+1} = ((rho (n+1) - sigma/lambda) b_n + n b_{n-1}) / ((n+1)(n+2))`.
/// They relate to the Frobenius coefficients by `b_n = a_n (-i)^n`.
pub fn axis_series(params: &GribovParams, sigma: f64, n_terms: usize) -> Result<Vec<f64>> {
    let rho = params.rho()?;
    let mut b = vec![0.0; n_terms + 1];
    b[0] = 1.0;
    for n in 0..n_terms {
        let nf = n as f64;
        let prev = if n >= 1 { nf * b[n - 1] } else { 0.0 };
        b[n + 1] = ((rho * (nf + 1.0) - sigma / params.lambda) * b[n] + prev) / ((nf + 1.0) * (nf + 2.0));
    }
    Ok(b)
}

/// `(u, u')` from [`axis_series`] coefficients at `y`.
pub fn axis_series_eval(b: &[f64], y: f64) -> (f64, f64) {
    let mut u = 0.0;
    let mut up = 0.0;
    let mut yp = 1.0; // y^n
    for (n, bn) in b.iter().enumerate() {
        up += bn * (n as f64 + 1.0) * yp;
        yp *= y;
        u += bn * yp;
    }
    (u, up)
}

/// Parameters of `BHE(alpha, beta, gamma, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BheParams {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl BheParams {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Self {
        Self { alpha, beta, gamma, delta }
    }

    pub fn real(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self::new(alpha.into(), beta.into(), gamma.into(), delta.into())
    }

    /// The Gribov instance under `z = i sqrt(2) x`:
    /// `(-1, -sqrt(2) rho, 1, 2 sqrt(2) sigma / lambda)`.
    pub fn gribov(params: &GribovParams, sigma: f64) -> Result<Self> {
        let rho = params.rho()?;
        let r2 = std::f64::consts::SQRT_2;
        Ok(Self::real(-1.0, -r2 * rho, 1.0, 2.0 * r2 * sigma / params.lambda))
    }

    /// Left-hand side of the BHE at `x` for given `u, u', u''`.
    pub fn residual(&self, x: Complex64, u: Complex64, du: Complex64, d2u: Complex64) -> Complex64 {
        let (a, b, g, d) = (self.alpha, self.beta, self.gamma, self.delta);
        x * d2u + (ONE + a - b * x - 2.0 * x * x) * du + ((g - a - 2.0) * x - 0.5 * (d + (ONE + a) * b)) * u
    }

    /// Parameters of the dominant Thome branch: `(alpha, i beta, -gamma, -i delta)`.
    pub fn dominant_partner(&self) -> Self {
        Self::new(self.alpha, I * self.beta, -self.gamma, -I * self.delta)
    }
}

/// Series at 0: the polynomials `A_n` and the power-series coefficients
/// `c_n = A_n / ((1 + alpha)_n n!)` in `series`.
#[derive(Debug, Clone, PartialEq)]
pub struct BheSeries {
    pub a_poly: Vec<Complex64>,
    pub series: SeriesSolution,
}

fn is_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re.fract() == 0.0
}

/// Regular series of the BHE at 0 for non-integer `alpha`.
///
/// `A_{n+2} = [b (n+1) + (d + b (1+a))/2] A_{n+1} - (g - 2 - a - 2n)(n+1)(n+1+a) A_n`
/// for `n >= -1`, with `A_{-1} = 0`, `A_0 = 1`. The power-series coefficients use
/// the equivalent direct recurrence, which stays well scaled.
pub fn bhe_series_at_zero(p: &BheParams, n_terms: usize) -> Result<BheSeries> {
    if is_integer(p.alpha) {
        return Err(Error::Logarithmic(format!(
            "alpha = {} is an integer: the second solution at 0 has logarithmic terms",
            p.alpha
        )));
    }
    if n_terms < 2 {
        return Err(Error::InvalidTruncation { got: n_terms, min: 2 });
    }
    let (a, b, g, d) = (p.alpha, p.beta, p.gamma, p.delta);
    let half = 0.5 * (d + b * (ONE + a));
    let mut big = vec![ZERO; n_terms + 1];
    big[0] = ONE;
    big[1] = half;
    for n in 0..n_terms - 1 {
        let nf = n as f64;
        big[n + 2] = (b * (nf + 1.0) + half) * big[n + 1] - (g - 2.0 - a - 2.0 * nf) * (nf + 1.0) * (a + nf + 1.0) * big[n];
    }
    let mut c = vec![ZERO; n_terms + 1];
    c[0] = ONE;
    for n in 0..n_terms {
        let nf = n as f64;
        let prev = if n >= 1 { (g - a - 2.0 * nf) * c[n - 1] } else { ZERO };
        c[n + 1] = ((b * nf + half) * c[n] - prev) / ((nf + 1.0) * (a + nf + 1.0));
    }
    Ok(BheSeries {
        a_poly: big,
        series: SeriesSolution { exponent: 0.0, coeffs: c, alpha_param: a, trunc: n_terms },
    })
}

/// One formal solution at infinity.
///
/// Recessive: `u = x^p sum a_n x^{-n}` with `p = (gamma - alpha - 2)/2`.
/// Dominant: `u = exp(x^2 + beta x) t^q sum a_n t^{-n}`, `t = i x`,
/// `q = -(gamma + alpha + 2)/2`, coefficients of the partner parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ThomeBranch {
    pub dominant: bool,
    pub exponent: Complex64,
    pub series: SeriesSolution,
    /// `beta` of the original equation (enters the exponential prefactor).
    pub beta: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomeValue {
    pub value: Complex64,
    pub derivative: Complex64,
    pub second: Complex64,
    /// Size of the first omitted term, times the prefactor.
    pub error_bound: f64,
    pub terms_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThomePair {
    pub recessive: ThomeBranch,
    pub dominant: ThomeBranch,
}

/// `2(n+2) a_{n+2} = [(d + b(g-1))/2 - b(n+1)] a_{n+1} - ((g-a-2)/2 - n)((g+a-2)/2 - n) a_n`.
fn thome_coeffs(p: &BheParams, n_terms: usize) -> Vec<Complex64> {
    let (a, b, g, d) = (p.alpha, p.beta, p.gamma, p.delta);
    let h1 = 0.5 * (d + b * (g - 1.0));
    let e1 = 0.5 * (g - a - 2.0);
    let e2 = 0.5 * (g + a - 2.0);
    let mut c = vec![ZERO; n_terms + 1];
    c[0] = ONE;
    if n_terms >= 1 {
        c[1] = 0.5 * h1;
    }
    for n in 0..n_terms.saturating_sub(1) {
        let nf = n as f64;
        c[n + 2] = ((h1 - b * (nf + 1.0)) * c[n + 1] - (e1 - nf) * (e2 - nf) * c[n]) / (2.0 * (nf + 2.0));
    }
    c
}

pub fn thome_series_at_infinity(p: &BheParams, n_terms: usize) -> ThomePair {
    let rec_exp = 0.5 * (p.gamma - p.alpha - 2.0);
    let dom_exp = -0.5 * (p.gamma + p.alpha + 2.0);
    let partner = p.dominant_partner();
    ThomePair {
        recessive: ThomeBranch {
            dominant: false,
            exponent: rec_exp,
            series: SeriesSolution { exponent: rec_exp.re, coeffs: thome_coeffs(p, n_terms), alpha_param: p.alpha, trunc: n_terms },
            beta: p.beta,
        },
        dominant: ThomeBranch {
            dominant: true,
            exponent: dom_exp,
            series: SeriesSolution { exponent: dom_exp.re, coeffs: thome_coeffs(&partner, n_terms), alpha_param: p.alpha, trunc: n_terms },
            beta: p.beta,
        },
    }
}

/// Optimally truncated `w(t) = sum a_n t^{e-n}` with two derivatives in `t`.
fn asymptotic_sum(coeffs: &[Complex64], e: Complex64, t: Complex64) -> (Complex64, Complex64, Complex64, f64, usize) {
    let inv = ONE / t;
    let mut best = f64::INFINITY;
    let mut tp = ONE;
    let mut mags = Vec::with_capacity(coeffs.len());
    for a in coeffs {
        mags.push((a * tp).norm());
        tp *= inv;
    }
    // smallest nonzero term before the first increase; the sum stops just before it
    let mut kstar = mags.len() - 1;
    for (n, m) in mags.iter().enumerate() {
        if *m == 0.0 {
            continue;
        }
        if *m > best {
            break;
        }
        best = *m;
        kstar = n;
    }
    let used = kstar.max(1);
    let omitted = mags[kstar.max(1).min(mags.len() - 1)];
    let te = t.powc(e);
    let (mut w, mut dw, mut d2w) = (ZERO, ZERO, ZERO);
    let mut tp = ONE;
    for (n, a) in coeffs.iter().take(used).enumerate() {
        let k = e - n as f64;
        let term = a * tp * te;
        w += term;
        dw += term * k * inv;
        d2w += term * k * (k - 1.0) * inv * inv;
        tp *= inv;
    }
    (w, dw, d2w, omitted * te.norm(), used)
}

impl ThomeBranch {
    pub fn evaluate(&self, x: Complex64) -> ThomeValue {
        if !self.dominant {
            let (w, dw, d2w, err, used) = asymptotic_sum(&self.series.coeffs, self.exponent, x);
            return ThomeValue { value: w, derivative: dw, second: d2w, error_bound: err, terms_used: used };
        }
        let t = I * x;
        let (w, dwt, d2wt, err, used) = asymptotic_sum(&self.series.coeffs, self.exponent, t);
        let dw = I * dwt;
        let d2w = -d2wt;
        let e = (x * x + self.beta * x).exp();
        let g = 2.0 * x + self.beta;
        ThomeValue {
            value: e * w,
            derivative: e * (dw + g * w),
            second: e * (d2w + 2.0 * g * dw + (2.0 + g * g) * w),
            error_bound: err * e.norm(),
            terms_used: used,
        }
    }
}

/// Experimental: formal series in `t = 1/z` for the branch bounded at infinity,
/// `phi = sum a_k t^k`, from
/// `t^3 phi'' + (2 t^2 + i rho t - 1) phi' + (i sigma/lambda) phi = 0`, i.e.
/// `(k+2) a_{k+2} = k(k+1) a_k + i (rho (k+1) + sigma/lambda) a_{k+1}`, `a_0 = 1`.
/// Divergent; evaluate with [`inverse_chart_eval`].
pub fn inverse_chart_series(params: &GribovParams, sigma: Complex64, n_terms: usize) -> Result<SeriesSolution> {
    let rho = params.rho()?;
    let sl = sigma / params.lambda;
    let mut a = vec![ZERO; n_terms + 1];
    a[0] = ONE;
    if n_terms >= 1 {
        a[1] = I * sl;
    }
    for k in 0..n_terms.saturating_sub(1) {
        let kf = k as f64;
        a[k + 2] = (a[k] * kf * (kf + 1.0) + I * (rho * (kf + 1.0) + sl) * a[k + 1]) / (kf + 2.0);
    }
    Ok(SeriesSolution { exponent: 0.0, coeffs: a, alpha_param: I * (sl - rho), trunc: n_terms })
}

/// Optimally truncated value of [`inverse_chart_series`] at `z` (so `t = 1/z`),
/// returned with `d/dz`, `d^2/dz^2` and the omitted-term bound.
pub fn inverse_chart_eval(sol: &SeriesSolution, z: Complex64) -> ThomeValue {
    // phi(z) = sum a_k z^{-k}: the same shape as the recessive sum with exponent 0
    let (w, dw, d2w, err, used) = asymptotic_sum(&sol.coeffs, ZERO, z);
    ThomeValue { value: w, derivative: dw, second: d2w, error_bound: err, terms_used: used }
}
