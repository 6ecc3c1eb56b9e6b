//! Spectrum of the truncated matrix on `B0` and the structure checks built on it:
//! bilinear and parity Gram matrices, the sign operator, completeness, bounds.
//!
//! The `B0` block is complex symmetric with purely imaginary off-diagonals, so
//! `diag(i^n)` maps it to a real tridiagonal matrix (off-diagonal products are
//! negative, so it is not symmetrizable). Eigenvalues come from a real Schur
//! decomposition of that matrix; eigenvectors from inverse iteration on the
//! original complex band.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::bargmann::{apply_operator, build_hamiltonian, BandedOperator, CoeffVector};
use crate::dd::ComplexDD;
use crate::error::{Error, Result};
use crate::params::GribovParams;
use crate::tridiag::{dot, inverse_iteration, rayleigh_iteration, Scalar, Tridiagonal};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Tolerances of the spectral checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralTolerances {
    /// Accepted pairs satisfy `residual <= tol_eig * |sigma|`.
    pub tol_eig: f64,
    pub tol_ortho: f64,
    pub tol_real: f64,
    /// Relative agreement of successive truncations for "converged".
    pub tol_converged: f64,
    /// Relative gap below which two eigenvalues count as equal.
    pub gap_rel: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self { tol_eig: 1e-8, tol_ortho: 1e-8, tol_real: 1e-8, tol_converged: 1e-8, gap_rel: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub sigma: Complex64,
    /// Unit norm, `c_0 = 0`, largest entry real positive.
    pub vector: CoeffVector,
    /// `||H v - sigma v||` on rows `1..N-1` (the edge row is excluded).
    pub residual: f64,
}

fn cmp_sigma(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn b0_tridiagonal(op: &BandedOperator) -> Tridiagonal<Complex64> {
    let (d, l, u) = op.b0_block();
    Tridiagonal { sub: l, diag: d.into_iter().map(|x| Complex64::new(x, 0.0)).collect(), sup: u }
}

/// All eigenvalues of the `B0` block, sorted by real part then imaginary part.
pub fn b0_eigenvalues(op: &BandedOperator) -> Result<Vec<Complex64>> {
    let (d, l, u) = op.b0_block();
    let n = d.len();
    if n == 0 {
        return Err(Error::InvalidTruncation { got: op.trunc, min: 2 });
    }
    let mut out: Vec<Complex64>;
    if l.iter().chain(&u).all(|x| *x == ZERO) {
        out = d.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    } else if l.iter().chain(&u).all(|x| x.re == 0.0) {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = d[i];
        }
        for i in 0..n - 1 {
            // D^-1 M D with D = diag(i^j)
            m[(i, i + 1)] = -u[i].im;
            m[(i + 1, i)] = l[i].im;
        }
        let schur = Schur::try_new(m, f64::EPSILON, 100 * n).ok_or_else(|| {
            Error::NoConvergence(format!("real Schur iteration failed at N = {}; try a different truncation", op.trunc))
        })?;
        out = schur.complex_eigenvalues().iter().copied().collect();
    } else {
        let dense = op.to_dense();
        let block = dense.view((1, 1), (n, n)).clone_owned();
        let schur = Schur::try_new(block, f64::EPSILON, 100 * n).ok_or_else(|| {
            Error::NoConvergence(format!("complex Schur iteration failed at N = {}; try a different truncation", op.trunc))
        })?;
        out = schur
            .eigenvalues()
            .ok_or_else(|| Error::NoConvergence("Schur form is not triangular".into()))?
            .iter()
            .copied()
            .collect();
    }
    out.sort_by(cmp_sigma);
    Ok(out)
}

fn start_vector(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::new(1.0 + 0.37 * ((j + 1) as f64).sin(), 0.21 * ((j + 2) as f64).cos())).collect()
}

fn normalize_phase(x: &mut [Complex64]) {
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let (mut best, mut arg) = (0.0, 0.0);
    for c in x.iter() {
        if c.norm() > best {
            best = c.norm();
            arg = c.arg();
        }
    }
    let rot = Complex64::from_polar(1.0 / norm, -arg);
    for c in x.iter_mut() {
        *c *= rot;
    }
}

/// Residual on rows `1..N-1`.
pub fn interior_residual(op: &BandedOperator, sigma: Complex64, v: &CoeffVector) -> Result<f64> {
    let hv = apply_operator(op, v)?;
    let n = op.trunc;
    Ok((1..n - 1).map(|i| (hv.coeffs[i] - sigma * v.coeffs[i]).norm_sqr()).sum::<f64>().sqrt())
}

/// The `k` eigenpairs of smallest real part on the `B0` block.
pub fn eigen_spectrum(op: &BandedOperator, k: usize) -> Result<Vec<EigenPair>> {
    if k > op.trunc - 1 {
        return Err(Error::Domain(format!("k = {k} exceeds the B0 dimension {}", op.trunc - 1)));
    }
    let sigmas = b0_eigenvalues(op)?;
    let t = b0_tridiagonal(op);
    let start = start_vector(t.len());
    sigmas
        .into_iter()
        .take(k)
        .map(|sigma| {
            let x = inverse_iteration(&t, sigma, &start, 3);
            let mut coeffs = Vec::with_capacity(op.trunc);
            coeffs.push(ZERO);
            coeffs.extend(x);
            normalize_phase(&mut coeffs[1..]);
            let vector = CoeffVector::new(coeffs);
            let residual = interior_residual(op, sigma, &vector)?;
            Ok(EigenPair { sigma, vector, residual })
        })
        .collect()
}

/// Eigenpairs at order `N` together with a per-eigenvalue convergence flag from
/// comparison against order `N/2`.
#[derive(Debug, Clone)]
pub struct JacobiRun {
    pub trunc: usize,
    pub pairs: Vec<EigenPair>,
    pub converged: Vec<bool>,
    pub reference: Vec<Complex64>,
}

pub fn jacobi_run(params: &GribovParams, trunc: usize, k: usize, tol: &SpectralTolerances) -> Result<JacobiRun> {
    let op = build_hamiltonian(params, trunc)?;
    let pairs = eigen_spectrum(&op, k)?;
    let half = (trunc / 2).max(2);
    let reference = b0_eigenvalues(&build_hamiltonian(params, half)?)?;
    let converged = pairs
        .iter()
        .map(|p| {
            let near = reference.iter().map(|r| (r - p.sigma).norm()).fold(f64::INFINITY, f64::min);
            near <= tol.tol_converged * p.sigma.norm().max(1.0)
        })
        .collect();
    Ok(JacobiRun { trunc, pairs, converged, reference })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub trunc: usize,
    pub sigmas: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub params: GribovParams,
    pub rows: Vec<ConvergenceRow>,
    /// Digits shared by the last two rows (0 when fewer than two rows).
    pub digits: Vec<f64>,
    pub converged: Vec<bool>,
}

/// First `k` eigenvalues for each truncation in ascending `n_list`.
pub fn convergence_study(params: &GribovParams, n_list: &[usize], k: usize, tol: &SpectralTolerances) -> Result<ConvergenceStudy> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("truncation list must be strictly ascending".into()));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let ev = b0_eigenvalues(&build_hamiltonian(params, n)?)?;
            Ok(ConvergenceRow { trunc: n, sigmas: ev.into_iter().take(k).collect() })
        })
        .collect::<Result<Vec<_>>>()?;
    let (digits, converged) = match rows.as_slice() {
        [.., a, b] => {
            let d: Vec<f64> = b
                .sigmas
                .iter()
                .enumerate()
                .map(|(i, s)| match a.sigmas.get(i) {
                    Some(r) => {
                        let rel = (s - r).norm() / s.norm().max(1.0);
                        if rel == 0.0 {
                            16.0
                        } else {
                            (-rel.log10()).clamp(0.0, 16.0)
                        }
                    }
                    None => 0.0,
                })
                .collect();
            let c = d.iter().map(|x| *x >= -tol.tol_converged.log10()).collect();
            (d, c)
        }
        _ => (vec![0.0; k], vec![false; k]),
    };
    Ok(ConvergenceStudy { params: *params, rows, digits, converged })
}

/// Bilinear Gram matrix `G_mn = sum_k c_{m,k} c_{n,k}`.
///
/// For a complex symmetric matrix this is the biorthogonality form: left
/// eigenvectors are the transposes of right ones. It equals the parity pairing
/// `<phi_m, P phi_n>` up to one phase per column when the eigenvalues are real.
pub fn biorthogonality_matrix(pairs: &[EigenPair]) -> DMatrix<Complex64> {
    let k = pairs.len();
    DMatrix::from_fn(k, k, |m, n| {
        pairs[m].vector.coeffs.iter().zip(&pairs[n].vector.coeffs).map(|(a, b)| a * b).sum()
    })
}

/// Parity Gram matrix `<phi_m, P phi_n> = sum_k (-1)^k c_{m,k} conj(c_{n,k})`.
pub fn parity_gram(pairs: &[EigenPair]) -> DMatrix<Complex64> {
    let k = pairs.len();
    DMatrix::from_fn(k, k, |m, n| {
        pairs[m]
            .vector
            .coeffs
            .iter()
            .zip(&pairs[n].vector.coeffs)
            .enumerate()
            .map(|(j, (a, b))| if j % 2 == 0 { a * b.conj() } else { -(a * b.conj()) })
            .sum()
    })
}

/// Largest `|G_mn|` over `m != n` with `|sigma_m - sigma_n| > gap`.
/// The gap is `gap_rel * (max Re sigma - min Re sigma)`.
pub fn max_off_diagonal(g: &DMatrix<Complex64>, pairs: &[EigenPair], gap_rel: f64) -> f64 {
    let re: Vec<f64> = pairs.iter().map(|p| p.sigma.re).collect();
    let span = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - re.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap = gap_rel * span.max(0.0);
    let mut worst = 0.0_f64;
    for m in 0..pairs.len() {
        for n in 0..pairs.len() {
            if m != n && (pairs[m].sigma - pairs[n].sigma).norm() > gap {
                worst = worst.max(g[(m, n)].norm());
            }
        }
    }
    worst
}

/// `nu_n = sign <phi_n, P phi_n>`.
pub fn nu_signs(pairs: &[EigenPair], tol: f64) -> Result<Vec<i8>> {
    pairs
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let s: f64 = p
                .vector
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| if j % 2 == 0 { c.norm_sqr() } else { -c.norm_sqr() })
                .sum();
            if s.abs() <= tol {
                Err(Error::DegenerateSign { index: idx, value: s.abs() })
            } else {
                Ok(if s > 0.0 { 1 } else { -1 })
            }
        })
        .collect()
}

/// The indefinite product `<<v, w>> = <v, P nu w>`, with `nu` acting through the
/// biorthogonal expansion of `w` over the given eigenpairs.
#[derive(Debug, Clone)]
pub struct IndefiniteProduct<'a> {
    pairs: &'a [EigenPair],
    nu: Vec<i8>,
    gram_diag: Vec<Complex64>,
}

impl<'a> IndefiniteProduct<'a> {
    pub fn new(pairs: &'a [EigenPair], tol: f64) -> Result<Self> {
        let nu = nu_signs(pairs, tol)?;
        let gram_diag = pairs.iter().map(|p| p.vector.coeffs.iter().map(|c| c * c).sum()).collect();
        Ok(Self { pairs, nu, gram_diag })
    }

    pub fn nu(&self) -> &[i8] {
        &self.nu
    }

    /// `nu w` over the span of the stored eigenvectors.
    pub fn apply_nu(&self, w: &CoeffVector) -> Result<CoeffVector> {
        let mut out = CoeffVector::zeros(w.trunc());
        for ((p, s), g) in self.pairs.iter().zip(&self.nu).zip(&self.gram_diag) {
            if p.vector.trunc() != w.trunc() {
                return Err(Error::DimensionMismatch { left: p.vector.trunc(), right: w.trunc() });
            }
            let a: Complex64 = w.coeffs.iter().zip(&p.vector.coeffs).map(|(x, y)| x * y).sum::<Complex64>() / g;
            out = out.axpy(a * f64::from(*s), &p.vector)?;
        }
        Ok(out)
    }

    pub fn product(&self, v: &CoeffVector, w: &CoeffVector) -> Result<Complex64> {
        let nw = self.apply_nu(w)?.parity();
        crate::bargmann::inner_product(v, &nw)
    }
}

/// Working precision of [`completeness_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precision {
    Double,
    /// Eigenpairs are refined and the projection is carried out in double-double.
    DoubleDouble,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    /// `r_k` after the first `k` modes, `k = 1..`.
    pub residuals: Vec<f64>,
    pub terminal: f64,
    pub best: f64,
    pub best_k: usize,
    /// Modes dropped because their Gram entry fell below the threshold.
    pub skipped: Vec<usize>,
    pub precision: Precision,
}

fn project<T: Scalar>(target: &[T], vectors: &[Vec<T>], gram_floor: f64, norm: impl Fn(&[T]) -> f64) -> (Vec<f64>, Vec<usize>) {
    let mut r = target.to_vec();
    let mut out = Vec::with_capacity(vectors.len());
    let mut skipped = Vec::new();
    for (j, x) in vectors.iter().enumerate() {
        let g = dot(x, x);
        let scale = x.iter().map(|c| c.modulus()).fold(0.0, f64::max).powi(2);
        if g.modulus() <= gram_floor * scale {
            skipped.push(j);
        } else {
            let a = dot(target, x) / g;
            for (ri, xi) in r.iter_mut().zip(x) {
                *ri = *ri - a * *xi;
            }
        }
        out.push(norm(&r));
    }
    (out, skipped)
}

/// `r_k = || t - sum_{j <= k} (g_j / G_jj) phi_j ||` with the bilinear pairing
/// `g_j = sum t_i c_{j,i}` and `G_jj = sum c_{j,i}^2`.
///
/// The expansion coefficients are ratios of O(1) pairings to Gram entries that
/// decay exponentially along the spectrum, so in double precision the residual
/// stalls far above round-off. [`Precision::DoubleDouble`] re-refines every
/// eigenpair of the (double-valued) band matrix by Rayleigh iteration and
/// carries the projection in double-double.
pub fn completeness_residual(op: &BandedOperator, pairs: &[EigenPair], target: &CoeffVector, precision: Precision) -> Result<CompletenessReport> {
    if target.trunc() != op.trunc {
        return Err(Error::DimensionMismatch { left: op.trunc, right: target.trunc() });
    }
    if !target.in_b0() {
        return Err(Error::Domain("completeness target must vanish at the origin (c_0 = 0)".into()));
    }
    let (residuals, skipped) = match precision {
        Precision::Double => {
            let vecs: Vec<Vec<Complex64>> = pairs.iter().map(|p| p.vector.coeffs[1..].to_vec()).collect();
            project(&target.coeffs[1..], &vecs, 1e-14, |r| r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        }
        Precision::DoubleDouble => {
            let t = b0_tridiagonal(op);
            let tdd = Tridiagonal::<ComplexDD> {
                sub: t.sub.iter().map(|&c| c.into()).collect(),
                diag: t.diag.iter().map(|&c| c.into()).collect(),
                sup: t.sup.iter().map(|&c| c.into()).collect(),
            };
            let vecs: Vec<Vec<ComplexDD>> = pairs
                .iter()
                .map(|p| {
                    let start: Vec<ComplexDD> = p.vector.coeffs[1..].iter().map(|&c| c.into()).collect();
                    rayleigh_iteration(&tdd, p.sigma.into(), &start, 3).1
                })
                .collect();
            let tgt: Vec<ComplexDD> = target.coeffs[1..].iter().map(|&c| c.into()).collect();
            project(&tgt, &vecs, 1e-28, |r| {
                let s = r.iter().fold(TwoFloat::from(0.0), |acc, c| acc + c.norm_sqr());
                f64::from(s).sqrt()
            })
        }
    };
    let (best_k, best) = residuals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if *r < acc.1 { (i + 1, *r) } else { acc });
    Ok(CompletenessReport {
        terminal: residuals.last().copied().unwrap_or_else(|| crate::bargmann::bargmann_norm(target)),
        residuals,
        best,
        best_k,
        skipped,
        precision,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub bound: f64,
    pub min_re: f64,
    pub margin: f64,
    pub checked: usize,
}

/// `min Re sigma >= |mu| - tol` over the converged eigenvalues.
pub fn lower_bound_check(sigmas: &[Complex64], converged: &[bool], params: &GribovParams, tol: f64) -> Result<LowerBoundReport> {
    if params.mu == 0.0 {
        return Err(Error::Parameter("the lower bound needs mu != 0".into()));
    }
    let bound = params.mu.abs();
    let used: Vec<Complex64> = sigmas.iter().zip(converged).filter(|(_, c)| **c).map(|(s, _)| *s).collect();
    let min_re = used.iter().map(|s| s.re).fold(f64::INFINITY, f64::min);
    let margin = min_re - bound;
    if margin < -tol {
        return Err(Error::LowerBound(format!(
            "min Re sigma = {min_re} < |mu| = {bound} (margin {margin:e}); mu = {}, lambda = {}; converged eigenvalues: {used:?}",
            params.mu, params.lambda
        )));
    }
    Ok(LowerBoundReport { bound, min_re, margin, checked: used.len() })
}

/// Largest `|Im sigma| / (1 + |sigma|)` over the converged eigenvalues.
pub fn reality_defect(sigmas: &[Complex64], converged: &[bool]) -> f64 {
    sigmas
        .iter()
        .zip(converged)
        .filter(|(_, c)| **c)
        .map(|(s, _)| s.im.abs() / (1.0 + s.norm()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64, lam: f64) -> GribovParams {
        GribovParams::new(mu, lam).unwrap()
    }

    #[test]
    fn diagonal_case_is_exact() {
        let op = build_hamiltonian(&p(3.0, 0.0), 7).unwrap();
        let pairs = eigen_spectrum(&op, 5).unwrap();
        for (n, e) in pairs.iter().enumerate() {
            assert_eq!(e.sigma, Complex64::new(3.0 * (n + 1) as f64, 0.0));
            assert!(e.residual < 1e-12);
            assert!((e.vector.coeffs[n + 1].norm() - 1.0).abs() < 1e-14);
        }
        let nu = nu_signs(&pairs, 1e-12).unwrap();
        assert_eq!(nu, vec![-1, 1, -1, 1, -1]);
        let g = biorthogonality_matrix(&pairs);
        for m in 0..5 {
            for n in 0..5 {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((g[(m, n)].norm() - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn complex_path_agrees_with_real_form() {
        // a general complex band forces the complex Schur route
        let op = build_hamiltonian(&p(1.0, 0.5), 40).unwrap();
        let mut skew = op.clone();
        skew.lower[3] += Complex64::new(1e-300, 0.0);
        let a = b0_eigenvalues(&op).unwrap();
        let b = b0_eigenvalues(&skew).unwrap();
        for i in 0..5 {
            assert!((a[i] - b[i]).norm() < 1e-9 * a[i].norm());
        }
    }

    #[test]
    fn eigenpair_residuals_and_ordering() {
        let op = build_hamiltonian(&p(1.0, 0.5), 128).unwrap();
        let pairs = eigen_spectrum(&op, 6).unwrap();
        assert!(pairs.windows(2).all(|w| w[0].sigma.re <= w[1].sigma.re));
        for e in &pairs {
            assert!(e.residual <= 1e-8 * e.sigma.norm(), "{}", e.residual);
            assert!(e.vector.in_b0());
        }
        assert!(eigen_spectrum(&op, 200).is_err());
    }

    #[test]
    fn reproduces_an_eigenvector() {
        let op = build_hamiltonian(&p(1.0, 0.5), 64).unwrap();
        let pairs = eigen_spectrum(&op, 6).unwrap();
        let target = pairs[2].vector.clone();
        let rep = completeness_residual(&op, &pairs, &target, Precision::Double).unwrap();
        assert!(rep.residuals[2] < 1e-10 && rep.terminal < 1e-10);
        let rep = completeness_residual(&op, &pairs, &target, Precision::DoubleDouble).unwrap();
        assert!(rep.residuals[2] < 1e-10);
    }

    #[test]
    fn completeness_trivial_case() {
        let op = build_hamiltonian(&p(2.0, 0.0), 8).unwrap();
        let pairs = eigen_spectrum(&op, 3).unwrap();
        let r = completeness_residual(&op, &pairs, &CoeffVector::basis(8, 1), Precision::Double).unwrap();
        assert!(r.residuals[0] < 1e-15);
        assert!(completeness_residual(&op, &pairs, &CoeffVector::basis(8, 0), Precision::Double).is_err());
    }

    #[test]
    fn lower_bound_and_errors() {
        let s = [Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)];
        let r = lower_bound_check(&s, &[true, true], &p(2.0, 0.0), 1e-12).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(matches!(lower_bound_check(&s, &[true, true], &p(2.5, 0.0), 1e-12), Err(Error::LowerBound(_))));
        assert!(lower_bound_check(&s, &[true, true], &p(0.0, 1.0), 1e-12).is_err());
    }

    #[test]
    fn convergence_table() {
        let st = convergence_study(&p(3.0, 0.0), &[8, 16], 3, &SpectralTolerances::default()).unwrap();
        assert!(st.converged.iter().all(|c| *c));
        assert_eq!(st.rows[0].sigmas[0], Complex64::new(3.0, 0.0));
        assert!(convergence_study(&p(1.0, 0.1), &[16, 8], 3, &SpectralTolerances::default()).is_err());
    }
}
