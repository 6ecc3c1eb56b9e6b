use errorfunctions::RealErrorFunctions;
use gribov_core::bargmann::build_hamiltonian;
use gribov_core::halfline::{build_problem, default_x_max, raw_eigenvalues};
use gribov_core::kernel;
use gribov_core::shooting::{growth_indicator, shoot_lowest, ShootingConfig};
use gribov_core::spectrum::{b0_eigenvalues, convergence_study, SpectralTolerances};
use gribov_core::{Complex64, GribovParams};

fn p(mu: f64, lam: f64) -> GribovParams {
    GribovParams::new(mu, lam).unwrap()
}

// high-accuracy lowest eigenvalues at (1, 0.5), truncation 512
const REF: [f64; 4] = [1.317707550332, 3.309588261136, 5.731703525228, 8.502996255469];

/// Second-order correction `sum_m H_nm H_mn / (E_n - E_m)` read off the dense matrix.
fn second_order(params: &GribovParams, n: usize) -> f64 {
    let h = build_hamiltonian(params, n + 4).unwrap().to_dense();
    let mut e = Complex64::new(0.0, 0.0);
    for m in [n - 1, n + 1] {
        e += h[(n, m)] * h[(m, n)] / (h[(n, n)] - h[(m, m)]);
    }
    h[(n, n)].re + e.re
}

#[test]
fn second_order_oracle_matches_closed_form() {
    let q = p(1.3, 0.07);
    for n in 1..6 {
        let closed = q.mu * n as f64 + q.lambda * q.lambda / q.mu * (n * (3 * n - 1)) as f64;
        assert!((second_order(&q, n) - closed).abs() < 1e-12);
    }
}

#[test]
fn perturbative_error_is_fourth_order() {
    // the residual of the second-order oracle must shrink ~16x when lambda halves
    let err = |lam: f64| {
        let q = p(1.0, lam);
        let ev = b0_eigenvalues(&build_hamiltonian(&q, 64).unwrap()).unwrap();
        (1..=3).map(|n| (ev[n - 1].re - second_order(&q, n)).abs()).fold(0.0, f64::max)
    };
    let (a, b) = (err(0.04), err(0.02));
    let ratio = a / b;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    let q = p(1.0, 0.1);
    let ev = b0_eigenvalues(&build_hamiltonian(&q, 64).unwrap()).unwrap();
    for n in 1..=4 {
        let o = n as f64 + 0.01 * (n * (3 * n - 1)) as f64;
        assert!((ev[n - 1].re - o).abs() <= 0.05 * o);
    }
}

#[test]
fn inner_integral_matches_dawson() {
    for rho in [0.0, 0.5, 2.0, 5.0] {
        for m in [0.1, 1.0, 3.0, 7.5] {
            let g = 0.5 * m * m + rho * m;
            let s2 = std::f64::consts::SQRT_2;
            let want = s2 * (((m + rho) / s2).dawson() - (-g).exp() * (rho / s2).dawson());
            let got = kernel::scaled_inner_integral(rho, m);
            assert!((got - want).abs() <= 1e-11 * want.abs(), "rho {rho} m {m}: {got} vs {want}");
        }
    }
}

#[test]
fn inverse_of_linear_monomial_is_exact() {
    // H z = mu z + i lambda z^2 sampled on z = -i s
    let q = p(1.0, 0.5);
    for y in [0.2, 1.0, 2.5, 5.0] {
        let u = kernel::inverse_at(&q, y, 40.0, |s| Complex64::new(0.0, -q.mu * s - q.lambda * s * s)).unwrap();
        assert!((u - Complex64::new(0.0, -y)).norm() <= 1e-12 * y, "y {y}: {u}");
    }
}

#[test]
fn inverse_satisfies_boundary_condition() {
    // e^{-g(y)} u'(y) -> 0 for a non-polynomial right-hand side
    let q = p(1.0, 0.5);
    let rho = 2.0;
    let psi = |s: f64| Complex64::new((-s).exp(), 0.0);
    let flux = |y: f64| {
        let d = 1e-4;
        let up = (kernel::inverse_at(&q, y + d, 40.0, psi).unwrap() - kernel::inverse_at(&q, y - d, 40.0, psi).unwrap()) / (2.0 * d);
        (-(0.5 * y * y + rho * y)).exp() * up.norm()
    };
    let f: Vec<f64> = [2.0, 4.0, 6.0, 8.0].iter().map(|y| flux(*y)).collect();
    assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
    assert!(f[3] < 1e-10, "{f:?}");
}

#[test]
fn sturm_raw_eigenvalues_converge_as_h_squared() {
    let q = p(1.0, 0.5);
    let x = default_x_max(&q, 10.0);
    let m = 400;
    let errs: Vec<Vec<f64>> = [m, 2 * m + 1, 4 * m + 3]
        .iter()
        .map(|&mm| raw_eigenvalues(&build_problem(&q, x, mm, None).unwrap(), 3).iter().zip(REF).map(|(a, b)| (a - b).abs()).collect())
        .collect();
    for i in 0..3 {
        for w in errs.windows(2) {
            let slope = (w[0][i] / w[1][i]).log2();
            assert!((slope - 2.0).abs() <= 0.2, "eigenvalue {i}: slope {slope}");
        }
    }
}

#[test]
fn shooting_is_stable_under_refinement() {
    let q = p(1.0, 0.5);
    let base = ShootingConfig::default();
    let y0 = base.endpoint(2.0);
    let runs = [
        base,
        ShootingConfig { y_max: Some(2.0 * y0), ..base },
        ShootingConfig { eps: base.eps / 2.0, rtol: base.rtol / 10.0, ..base },
    ];
    let sig: Vec<Vec<f64>> = runs.iter().map(|c| shoot_lowest(&q, 3, 8.0, 32, c).unwrap().iter().map(|r| r.sigma).collect()).collect();
    for s in &sig[1..] {
        for (a, b) in s.iter().zip(&sig[0]) {
            assert!((a - b).abs() <= 1e-8 * b, "{a} vs {b}");
        }
    }
    for (a, b) in sig[0].iter().zip(REF) {
        assert!((a - b).abs() <= 1e-9 * b);
    }
}

#[test]
fn growth_indicator_is_continuous() {
    let q = p(1.0, 0.5);
    let cfg = ShootingConfig::default();
    let s = 2.2;
    let d0 = growth_indicator(&q, s, &cfg).unwrap();
    let jump = |h: f64| (growth_indicator(&q, s + h, &cfg).unwrap() - d0).abs();
    let (a, b) = (jump(1e-3), jump(1e-4));
    assert!(b < a && (5.0..20.0).contains(&(a / b)), "{a} {b}");
}

#[test]
fn nystrom_stable_under_node_doubling() {
    let q = p(1.0, 0.5);
    let y = kernel::default_y_max(2.0);
    let a = kernel::nystrom_spectrum(&q, &kernel::positive_grid(&q, y, 2).unwrap(), 3).unwrap();
    let b = kernel::nystrom_spectrum(&q, &kernel::positive_grid(&q, y, 4).unwrap(), 3).unwrap();
    assert_eq!(a.sigmas.len(), 3);
    for (x, z) in a.sigmas.iter().zip(&b.sigmas) {
        assert!((x - z).abs() <= 1e-4 * z);
    }
    assert!((b.sigmas[0] - REF[0]).abs() <= 1e-8);
}

#[test]
fn converged_digits_grow_with_truncation() {
    let q = p(1.0, 0.5);
    let tol = SpectralTolerances::default();
    let digits: Vec<Vec<f64>> = [32, 64, 128, 256]
        .windows(2)
        .map(|w| convergence_study(&q, w, 3, &tol).unwrap().digits)
        .collect();
    for w in digits.windows(2) {
        for i in 0..3 {
            assert!(w[1][i] >= w[0][i] - 0.5, "{digits:?}");
        }
    }
}
