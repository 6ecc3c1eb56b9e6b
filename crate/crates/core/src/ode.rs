//! Adaptive Dormand-Prince 5(4) for small real systems.
//!
//! Linear problems may grow like `exp(y^2/2)`; the state is then rescaled and
//! the logarithm of the discarded factor accumulated in `log_scale`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
    /// Rescale when the largest component exceeds this (only for linear systems).
    pub rescale_above: Option<f64>,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, h0: 1e-4, max_steps: 200_000, rescale_above: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeState<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    /// True state is `y * exp(log_scale)`.
    pub log_scale: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub last_h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<const D: usize, F>(f: F, t0: f64, y0: [f64; D], t1: f64, cfg: &OdeConfig) -> Result<OdeState<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut st = OdeState { t: t0, y: y0, log_scale: 0.0, accepted: 0, rejected: 0, last_h: cfg.h0 };
    advance(&f, &mut st, t1, cfg)?;
    Ok(st)
}

/// Continues an existing state to `t1`.
pub fn advance<const D: usize, F>(f: &F, st: &mut OdeState<D>, t1: f64, cfg: &OdeConfig) -> Result<()>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let dir = if t1 >= st.t { 1.0 } else { -1.0 };
    let mut h = st.last_h.abs().max(1e-12) * dir;
    let mut k1 = f(st.t, &st.y);
    let mut steps = 0usize;
    while (t1 - st.t) * dir > 0.0 {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::Stiffness { at: st.t, reason: format!("more than {} steps", cfg.max_steps) });
        }
        if (st.t + h - t1) * dir > 0.0 {
            h = t1 - st.t;
        }
        let t = st.t;
        let y = &st.y;
        let k2 = f(t + C2 * h, &comb(y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &comb(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &comb(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &comb(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y5 = comb(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y5);
        let mut err = 0.0_f64;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            st.rejected += 1;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Stiffness { at: t, reason: "non-finite error estimate".into() });
            }
            continue;
        }
        if err <= 1.0 {
            st.t += h;
            st.y = y5;
            k1 = k7;
            st.accepted += 1;
            st.last_h = h;
            if let Some(cap) = cfg.rescale_above {
                let m = st.y.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if m > cap {
                    for v in st.y.iter_mut() {
                        *v /= m;
                    }
                    for v in k1.iter_mut() {
                        *v /= m;
                    }
                    st.log_scale += m.ln();
                }
            }
        } else {
            st.rejected += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < 1e-14 * st.t.abs().max(1.0) {
            return Err(Error::Stiffness { at: st.t, reason: format!("step size underflow (h = {h:e})") });
        }
    }
    Ok(())
}
