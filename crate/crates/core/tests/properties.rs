use std::sync::OnceLock;

use gribov_core::bargmann::{apply_operator, bargmann_norm, build_hamiltonian, inner_product, parity_conjugate, CoeffVector};
use gribov_core::halfline::{build_problem, potential, TransformChain};
use gribov_core::heun::{frobenius_coefficients, gribov_ode_residual};
use gribov_core::kernel::{self, WeightTheta};
use gribov_core::report::{compare, Method, ReportEigenvalue, SpectralReport};
use gribov_core::spectrum::b0_eigenvalues;
use gribov_core::{Complex64, GribovParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), n)
}

fn params() -> impl Strategy<Value = GribovParams> {
    (-3.0..3.0f64, -2.0..2.0f64).prop_map(|(m, l)| GribovParams::new(m, l).unwrap())
}

proptest! {
    #[test]
    fn hamiltonian_is_linear(p in params(), v in coeffs(24), w in coeffs(24), a in (-2.0..2.0f64, -2.0..2.0f64)) {
        let op = build_hamiltonian(&p, 24).unwrap();
        let a = c(a.0, a.1);
        let (v, w) = (CoeffVector::new(v), CoeffVector::new(w));
        let lhs = apply_operator(&op, &w.axpy(a, &v).unwrap()).unwrap();
        let rhs = apply_operator(&op, &w).unwrap().axpy(a, &apply_operator(&op, &v).unwrap()).unwrap();
        let scale = 1.0 + bargmann_norm(&rhs);
        for (x, y) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            prop_assert!((x - y).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn symmetric_and_parity_exact(p in params(), n in 2usize..80) {
        let op = build_hamiltonian(&p, n).unwrap();
        prop_assert!(op.is_symmetric());
        let flipped = build_hamiltonian(&p.with_lambda(-p.lambda).unwrap(), n).unwrap().to_dense();
        prop_assert_eq!(parity_conjugate(&op).to_dense(), flipped);
    }

    #[test]
    fn real_part_is_number_form(p in params(), v in coeffs(32)) {
        let op = build_hamiltonian(&p, 32).unwrap();
        let v = CoeffVector::new(v);
        let hv = apply_operator(&op, &v).unwrap();
        let re = inner_product(&hv, &v).unwrap().re;
        let av = bargmann_norm(&v.annihilate()).powi(2);
        prop_assert!((re - p.mu * av).abs() <= 1e-12 * (1.0 + p.mu.abs() * av));
    }

    #[test]
    fn bounded_below_on_interior(p in params(), v in coeffs(30)) {
        let n = 32;
        let mut full = vec![Complex64::new(0.0, 0.0); n];
        full[1..31].copy_from_slice(&v);
        let v = CoeffVector::new(full);
        let hv = apply_operator(&build_hamiltonian(&p, n).unwrap(), &v).unwrap();
        prop_assert!(bargmann_norm(&hv) >= p.mu.abs() * bargmann_norm(&v) * (1.0 - 1e-12));
    }

    #[test]
    fn halfline_matrix_symmetric(mu in 0.1..3.0f64, lam in 0.1..2.0f64, m in 100usize..400) {
        let p = GribovParams::new(mu, lam).unwrap();
        let pr = build_problem(&p, 6.0, m, None).unwrap();
        let (d, e) = pr.matrix();
        prop_assert_eq!(d.len(), m);
        // stored once, used for both triangles
        prop_assert!(e.iter().all(|x| *x == e[0]));
        let rho = mu / lam;
        for (x, v) in pr.nodes.iter().zip(&pr.potential) {
            prop_assert!((v - potential(lam, rho, *x)).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn transform_chain_round_trip(rho in 0.0..5.0f64, x in 0.05..3.0f64, u in -10.0..10.0f64) {
        let ch = TransformChain { rho };
        let y = x * x;
        let (y2, u2) = ch.w_to_u(x, ch.v_to_w(x, ch.u_to_v(y, u)));
        prop_assert_eq!(y2, y);
        prop_assert!((u2 - u).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    #[test]
    fn positive_kernel_nonnegative(mu in 0.1..3.0f64, lam in 0.1..2.0f64, y in 0.0..10.0f64, s in 0.0..10.0f64) {
        let p = GribovParams::new(mu, lam).unwrap();
        prop_assert!(kernel::kernel_positive_axis(&p, y, s).unwrap() >= 0.0);
    }

    #[test]
    fn negative_kernel_sign_and_domination(mu in 0.2..3.0f64, lam in 0.2..2.0f64, y in -12.0..-1e-3f64, s in -12.0..-1e-3f64) {
        let p = GribovParams::new(mu, lam).unwrap();
        let k = kernel::kernel_negative_axis(&p, y, s).unwrap();
        let d = kernel::dominating_kernel(&p, y, s).unwrap();
        prop_assert!(k <= 0.0);
        prop_assert!(k.abs() <= d * (1.0 + 1e-12));
    }

    #[test]
    fn theta_weight(y in -20.0..0.0f64) {
        let t = WeightTheta;
        prop_assert!(t.abs(y) <= 1.0);
        if y < -1.0 {
            prop_assert_eq!(t.abs(y), 1.0);
        }
        prop_assert!((t.eval(-1.0 + 1e-12) - t.eval(-1.0)).abs() < 1e-11);
    }

    #[test]
    fn comparison_uses_only_converged(flags in prop::collection::vec(any::<(bool, bool)>(), 1..6), shift in 0.0..1.0f64) {
        let p = GribovParams::new(1.0, 0.5).unwrap();
        let mk = |m: Method, off: f64, f: Vec<bool>| {
            let ev = f.iter().enumerate().map(|(i, c)| ReportEigenvalue { re: i as f64 + 1.0 + off, im: 0.0, residual: 0.0, converged: *c }).collect();
            SpectralReport::new(m, &p, serde_json::Value::Null, ev, vec![])
        };
        let a = mk(Method::Jacobi, 0.0, flags.iter().map(|f| f.0).collect());
        let b = mk(Method::Sturm, shift, flags.iter().map(|f| f.1).collect());
        let cmp = compare(&[a, b], 1e-6, 1e-4, vec![]).unwrap();
        let both = flags.iter().filter(|f| f.0 && f.1).count();
        prop_assert_eq!(cmp.pairs[0].compared, both);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_invariant_under_lambda_flip(mu in 0.2..3.0f64, lam in 0.05..1.0f64) {
        let p = GribovParams::new(mu, lam).unwrap();
        let a = b0_eigenvalues(&build_hamiltonian(&p, 40).unwrap()).unwrap();
        let b = b0_eigenvalues(&build_hamiltonian(&p.with_lambda(-lam).unwrap(), 40).unwrap()).unwrap();
        for x in &a {
            let near = b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(near <= 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn frobenius_series_solves_ode(mu in 0.2..3.0f64, lam in 0.1..2.0f64, sigma in 0.5..10.0f64, r in 0.01..0.1f64, t in 0.0..std::f64::consts::TAU) {
        let p = GribovParams::new(mu, lam).unwrap();
        let s = c(sigma, 0.0);
        let sol = frobenius_coefficients(&p, s, 30).unwrap();
        let z = Complex64::from_polar(r, t);
        let (f, df, d2f) = sol.evaluate(z);
        let res = gribov_ode_residual(&p, s, z, f, df, d2f).unwrap();
        prop_assert!(res.norm() <= 1e-13 * (1.0 + sigma / lam));
    }

    #[test]
    fn inverse_identity_for_polynomials(a in coeffs(6)) {
        // H z^n = mu n z^n + i lambda (n (n-1) z^{n-1} + n z^{n+1})
        static SETUP: OnceLock<(GribovParams, kernel::KernelGrid, DMatrix<f64>)> = OnceLock::new();
        let (p, grid, mat) = SETUP.get_or_init(|| {
            let p = GribovParams::new(1.0, 0.5).unwrap();
            let grid = kernel::positive_grid(&p, 12.0, 4).unwrap();
            let m = kernel::nystrom_matrix(&p, &grid).unwrap();
            (p, grid, m)
        });
        let poly = |z: Complex64| -> Complex64 { a.iter().enumerate().map(|(k, ak)| ak * z.powi(k as i32 + 1)).sum() };
        let h_poly = |z: Complex64| -> Complex64 {
            a.iter()
                .enumerate()
                .map(|(k, ak)| {
                    let n = (k + 1) as f64;
                    let ni = k as i32 + 1;
                    ak * (p.mu * n * z.powi(ni) + c(0.0, p.lambda) * (n * (n - 1.0) * z.powi(ni - 1) + n * z.powi(ni + 1)))
                })
                .sum()
        };
        let psi: Vec<Complex64> = grid.nodes.iter().map(|&s| h_poly(c(0.0, -s))).collect();
        let r = kernel::apply_with_matrix(p, grid, mat, &psi, 1e-8, 6.0).unwrap();
        for (y, u) in r.y.iter().zip(&r.u) {
            if *y < 0.1 || *y > 6.0 {
                continue;
            }
            let want = poly(c(0.0, -y));
            let scale: f64 = a.iter().enumerate().map(|(k, ak)| ak.norm() * y.powi(k as i32 + 1)).sum();
            prop_assert!((u - want).norm() <= 1e-6 * scale, "y = {}: {} vs {}", y, u, want);
        }
    }
}
