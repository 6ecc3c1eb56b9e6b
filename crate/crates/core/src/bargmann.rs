//! Truncated Bargmann space in the orthonormal basis `e_n = z^n / sqrt(n!)`.
//!
//! Everything here is exact finite linear algebra. Operators built at order `N`
//! act on indices `0..N`; identities that would touch index `N` are checked on
//! the interior block only (the last row is the truncation edge).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GribovParams;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coordinates `c_0..c_{N-1}` in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub coeffs: Vec<Complex64>,
}

impl CoeffVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(trunc: usize) -> Self {
        Self { coeffs: vec![ZERO; trunc] }
    }

    /// The basis vector `e_n` in a space of dimension `trunc`.
    pub fn basis(trunc: usize, n: usize) -> Self {
        let mut v = Self::zeros(trunc);
        v.coeffs[n] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len()
    }

    /// Whether the vector lies in `B0` (vanishes at the origin).
    pub fn in_b0(&self) -> bool {
        self.coeffs.first().is_none_or(|c| *c == ZERO)
    }

    /// From monomial coefficients `a_n`, i.e. `phi(z) = sum a_n z^n`.
    /// `c_n = a_n sqrt(n!)`; the running factor overflows past n ~ 300.
    pub fn from_monomial(a: &[Complex64]) -> Self {
        let mut sf = 1.0_f64;
        let coeffs = a
            .iter()
            .enumerate()
            .map(|(n, an)| {
                if n > 0 {
                    sf *= (n as f64).sqrt();
                }
                an * sf
            })
            .collect();
        Self { coeffs }
    }

    /// Monomial coefficients `a_n = c_n / sqrt(n!)`.
    pub fn to_monomial(&self) -> Vec<Complex64> {
        let mut isf = 1.0_f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if n > 0 {
                    isf /= (n as f64).sqrt();
                }
                c * isf
            })
            .collect()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn axpy(&self, a: Complex64, other: &CoeffVector) -> Result<Self> {
        check_dims(self.trunc(), other.trunc())?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect(),
        })
    }

    /// `P v`, with `(P phi)(z) = phi(-z)`.
    pub fn parity(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| if n % 2 == 0 { *c } else { -c })
                .collect(),
        }
    }

    /// `A v` with `A e_n = sqrt(n) e_{n-1}`. Exact at truncation.
    pub fn annihilate(&self) -> Self {
        let n = self.trunc();
        let mut out = vec![ZERO; n];
        for k in 1..n {
            out[k - 1] = self.coeffs[k] * (k as f64).sqrt();
        }
        Self { coeffs: out }
    }
}

impl Serialize for CoeffVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.coeffs.len()))?;
        for c in &self.coeffs {
            seq.serialize_element(&[c.re, c.im])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for CoeffVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let coeffs = pairs
            .into_iter()
            .map(|p| match p.as_slice() {
                [re, im] => Ok(Complex64::new(*re, *im)),
                _ => Err(D::Error::custom("expected [re, im] pair")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { coeffs })
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// `<v, w> = sum c_n(v) conj(c_n(w))`.
pub fn inner_product(v: &CoeffVector, w: &CoeffVector) -> Result<Complex64> {
    check_dims(v.trunc(), w.trunc())?;
    Ok(v.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a * b.conj()).sum())
}

pub fn bargmann_norm(v: &CoeffVector) -> f64 {
    v.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `sum c_n z^n / sqrt(n!)`, the basis values built by `b_n = (z / sqrt n) b_{n-1}`.
pub fn evaluate_at(v: &CoeffVector, z: Complex64) -> Complex64 {
    let mut b = Complex64::new(1.0, 0.0);
    let mut acc = ZERO;
    for (n, c) in v.coeffs.iter().enumerate() {
        if n > 0 {
            b = b * z / (n as f64).sqrt();
        }
        acc += c * b;
    }
    acc
}

/// Value and first derivative at `z`. Uses `d/dz e_n = sqrt(n) e_{n-1}`.
pub fn evaluate_with_derivative(v: &CoeffVector, z: Complex64) -> (Complex64, Complex64) {
    let mut b = Complex64::new(1.0, 0.0);
    let mut val = ZERO;
    let mut der = ZERO;
    for (n, c) in v.coeffs.iter().enumerate() {
        if n > 0 {
            der += c * b * (n as f64).sqrt();
            b = b * z / (n as f64).sqrt();
        }
        val += c * b;
    }
    (val, der)
}

/// Tridiagonal complex matrix of the Hamiltonian at truncation order `N`.
///
/// `lower[n]` is entry `(n+1, n)` (coefficient of `e_{n+1}` in `H e_n`),
/// `upper[n]` is entry `(n, n+1)` (coefficient of `e_n` in `H e_{n+1}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedOperator {
    pub trunc: usize,
    pub diag: Vec<f64>,
    pub lower: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

pub fn build_hamiltonian(params: &GribovParams, trunc: usize) -> Result<BandedOperator> {
    if trunc < 2 {
        return Err(Error::InvalidTruncation { got: trunc, min: 2 });
    }
    let diag = (0..trunc).map(|n| params.mu * n as f64).collect();
    let off: Vec<Complex64> = (0..trunc - 1)
        .map(|n| {
            let nf = n as f64;
            Complex64::new(0.0, params.lambda * (nf * (nf + 1.0).sqrt()))
        })
        .collect();
    Ok(BandedOperator { trunc, diag, lower: off.clone(), upper: off })
}

impl BandedOperator {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            Complex64::new(self.diag[i], 0.0)
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            ZERO
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.trunc;
        let mut m = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diag[i], 0.0);
        }
        for i in 0..n - 1 {
            m[(i + 1, i)] = self.lower[i];
            m[(i, i + 1)] = self.upper[i];
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    /// Restriction to indices `1..N`, returned as `(diag, lower, upper)`.
    pub fn b0_block(&self) -> (Vec<f64>, Vec<Complex64>, Vec<Complex64>) {
        (self.diag[1..].to_vec(), self.lower[1..].to_vec(), self.upper[1..].to_vec())
    }
}

/// Matrix-vector product. The last component misses the coupling to `e_N`,
/// which is the caller's truncation edge.
pub fn apply_operator(op: &BandedOperator, v: &CoeffVector) -> Result<CoeffVector> {
    check_dims(op.trunc, v.trunc())?;
    let n = op.trunc;
    let c = &v.coeffs;
    let mut out = vec![ZERO; n];
    for i in 0..n {
        let mut acc = c[i] * op.diag[i];
        if i > 0 {
            acc += op.lower[i - 1] * c[i - 1];
        }
        if i + 1 < n {
            acc += op.upper[i] * c[i + 1];
        }
        out[i] = acc;
    }
    Ok(CoeffVector { coeffs: out })
}

/// `P M P` with `P e_n = (-1)^n e_n`: flips the sign of both off-diagonals.
pub fn parity_conjugate(op: &BandedOperator) -> BandedOperator {
    BandedOperator {
        trunc: op.trunc,
        diag: op.diag.clone(),
        lower: op.lower.iter().map(|x| -x).collect(),
        upper: op.upper.iter().map(|x| -x).collect(),
    }
}

/// Dense annihilation, creation and number matrices at order `N`.
#[derive(Debug, Clone)]
pub struct FactorMatrices {
    pub annihilation: DMatrix<Complex64>,
    pub creation: DMatrix<Complex64>,
    pub number: DMatrix<Complex64>,
}

pub fn factor_matrices(trunc: usize) -> FactorMatrices {
    let mut a = DMatrix::from_element(trunc, trunc, ZERO);
    let mut num = DMatrix::from_element(trunc, trunc, ZERO);
    for n in 0..trunc {
        num[(n, n)] = Complex64::new(n as f64, 0.0);
        if n > 0 {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    FactorMatrices { creation: a.transpose(), annihilation: a, number: num }
}

/// Max-norm distance between `mu A*A + i lambda (A N + N A* - (A + A*))` and
/// the built Hamiltonian on the leading `(N-2) x (N-2)` block.
pub fn laguerre_factorization_residual(params: &GribovParams, trunc: usize) -> Result<f64> {
    if trunc < 4 {
        return Err(Error::InvalidTruncation { got: trunc, min: 4 });
    }
    let f = factor_matrices(trunc);
    let (a, ad, num) = (&f.annihilation, &f.creation, &f.number);
    let il = Complex64::new(0.0, params.lambda);
    let mu = Complex64::new(params.mu, 0.0);
    let lhs = (ad * a) * mu + (a * num + num * ad - (a + ad)) * il;
    let h = build_hamiltonian(params, trunc)?.to_dense();
    let k = trunc - 2;
    let mut worst = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            worst = worst.max((lhs[(i, j)] - h[(i, j)]).norm());
        }
    }
    Ok(worst)
}
