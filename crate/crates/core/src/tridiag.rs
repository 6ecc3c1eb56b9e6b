//! Tridiagonal solves and inverse iteration, generic over the scalar so the
//! same code runs in `Complex64` and in [`ComplexDD`].

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::dd::ComplexDD;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_c64(c: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
    /// Modulus in double precision (used only for pivoting and scaling).
    fn modulus(self) -> f64;
    fn mul_f64(self, s: f64) -> Self;
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_c64(c: Complex64) -> Self {
        c
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn mul_f64(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_c64(c: Complex64) -> Self {
        c.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn mul_f64(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for ComplexDD {
    fn zero() -> Self {
        ComplexDD::ZERO
    }
    fn from_c64(c: Complex64) -> Self {
        c.into()
    }
    fn to_c64(self) -> Complex64 {
        self.into()
    }
    fn modulus(self) -> f64 {
        Complex64::from(self).norm()
    }
    fn mul_f64(self, s: f64) -> Self {
        self.scale(TwoFloat::from(s))
    }
}

/// Tridiagonal matrix: `sub[i]` at `(i+1, i)`, `sup[i]` at `(i, i+1)`.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Solves `(T - shift) x = rhs` by Gaussian elimination with partial pivoting.
    /// Exactly singular pivots are replaced by a tiny multiple of the matrix scale,
    /// which is what inverse iteration wants.
    pub fn solve_shifted(&self, shift: T, rhs: &[T]) -> Vec<T> {
        let n = self.len();
        let scale = self
            .diag
            .iter()
            .chain(&self.sub)
            .map(|x| x.modulus())
            .fold(shift.modulus(), f64::max)
            .max(1.0);
        let tiny = scale * f64::EPSILON * 1e-20;
        let z = T::zero();
        let mut rows: Vec<[T; 3]> = Vec::with_capacity(n);
        let mut y: Vec<T> = Vec::with_capacity(n);
        let mut cur = [self.diag[0] - shift, if n > 1 { self.sup[0] } else { z }, z];
        let mut rc = rhs[0];
        for i in 0..n {
            if i == n - 1 {
                if cur[0].modulus() == 0.0 {
                    cur[0] = T::from_c64(Complex64::new(tiny, 0.0));
                }
                rows.push(cur);
                y.push(rc);
                break;
            }
            let mut next = [
                self.sub[i],
                self.diag[i + 1] - shift,
                if i + 2 < n { self.sup[i + 1] } else { z },
            ];
            let mut rn = rhs[i + 1];
            if next[0].modulus() > cur[0].modulus() {
                std::mem::swap(&mut cur, &mut next);
                std::mem::swap(&mut rc, &mut rn);
            }
            if cur[0].modulus() == 0.0 {
                cur[0] = T::from_c64(Complex64::new(tiny, 0.0));
            }
            let m = next[0] / cur[0];
            let n1 = next[1] - m * cur[1];
            let n2 = next[2] - m * cur[2];
            rn = rn - m * rc;
            rows.push(cur);
            y.push(rc);
            cur = [n1, n2, z];
            rc = rn;
        }
        let mut x = vec![z; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc = acc - rows[i][1] * x[i + 1];
            }
            if i + 2 < n {
                acc = acc - rows[i][2] * x[i + 2];
            }
            x[i] = acc / rows[i][0];
        }
        x
    }

    /// Bilinear Rayleigh quotient `x^T T x / x^T x` (the right one for complex
    /// symmetric matrices).
    pub fn rayleigh_bilinear(&self, x: &[T]) -> T {
        let tx = self.matvec(x);
        let num = dot(x, &tx);
        let den = dot(x, x);
        num / den
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn rescale<T: Scalar>(x: &mut [T]) {
    let m = x.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        let s = 1.0 / m;
        for v in x.iter_mut() {
            *v = v.mul_f64(s);
        }
    }
}

/// Plain inverse iteration at a fixed shift. Output is max-normalized.
pub fn inverse_iteration<T: Scalar>(t: &Tridiagonal<T>, shift: T, start: &[T], iters: usize) -> Vec<T> {
    let mut x = start.to_vec();
    rescale(&mut x);
    for _ in 0..iters {
        x = t.solve_shifted(shift, &x);
        rescale(&mut x);
    }
    x
}

/// Rayleigh-quotient iteration with the bilinear quotient. Returns the refined
/// eigenvalue and a max-normalized vector.
pub fn rayleigh_iteration<T: Scalar>(t: &Tridiagonal<T>, shift: T, start: &[T], iters: usize) -> (T, Vec<T>) {
    let mut x = start.to_vec();
    rescale(&mut x);
    let mut s = shift;
    for _ in 0..iters {
        x = t.solve_shifted(s, &x);
        rescale(&mut x);
        s = t.rayleigh_bilinear(&x);
    }
    (s, x)
}
