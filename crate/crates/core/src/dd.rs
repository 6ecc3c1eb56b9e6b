//! Complex double-double scalar (about 32 significant digits).
//!
//! Only used where double precision demonstrably loses the answer: expansion
//! coefficients in the eigenbasis divide by Gram entries as small as 1e-11.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDD {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl ComplexDD {
    pub const ZERO: Self = Self { re: TwoFloat::from_f64(0.0), im: TwoFloat::from_f64(0.0) };

    pub fn new(re: TwoFloat, im: TwoFloat) -> Self {
        Self { re, im }
    }

    pub fn from_f64(x: f64) -> Self {
        Self { re: TwoFloat::from(x), im: TwoFloat::from(0.0) }
    }

    pub fn norm_sqr(self) -> TwoFloat {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: TwoFloat) -> Self {
        Self { re: self.re * s, im: self.im * s }
    }
}

impl From<Complex64> for ComplexDD {
    fn from(c: Complex64) -> Self {
        Self { re: TwoFloat::from(c.re), im: TwoFloat::from(c.im) }
    }
}

impl From<ComplexDD> for Complex64 {
    fn from(c: ComplexDD) -> Self {
        Complex64::new(f64::from(c.re), f64::from(c.im))
    }
}

impl Add for ComplexDD {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for ComplexDD {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for ComplexDD {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// Long division `x / y` with three correction steps. The crate's own
/// `TwoFloat / TwoFloat` drops the low word of the quotient.
pub fn div_dd(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    let q1 = x.hi() / y.hi();
    let r = x - y * q1;
    let q2 = r.hi() / y.hi();
    let r = r - y * q2;
    let q3 = r.hi() / y.hi();
    TwoFloat::from(q1) + q2 + q3
}

impl Div for ComplexDD {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let den = o.norm_sqr();
        Self {
            re: div_dd(self.re * o.re + self.im * o.im, den),
            im: div_dd(self.im * o.re - self.re * o.im, den),
        }
    }
}

impl Neg for ComplexDD {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}
