//! One line per acceptance criterion. Exits non-zero if any criterion fails.

use std::time::Instant;

use gribov_core::bargmann::{build_hamiltonian, laguerre_factorization_residual, parity_conjugate, CoeffVector};
use gribov_core::halfline::{self, build_problem, eigenvector, origin_slope, raw_eigenvalues, tail_fit, SturmConfig};
use gribov_core::kernel;
use gribov_core::pipeline::{run_method, PipelineConfig};
use gribov_core::report::{compare, Method};
use gribov_core::shooting::{shoot_lowest, ShootingConfig};
use gribov_core::spectrum::{
    b0_eigenvalues, biorthogonality_matrix, completeness_residual, convergence_study, eigen_spectrum, lower_bound_check, max_off_diagonal,
    parity_gram, reality_defect, Precision, SpectralTolerances,
};
use gribov_core::{Complex64, GribovParams};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn p(mu: f64, lam: f64) -> GribovParams {
    GribovParams::new(mu, lam).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn degenerate() -> Outcome {
    let t = Instant::now();
    let ev = b0_eigenvalues(&build_hamiltonian(&p(3.0, 0.0), 256)?)?;
    let err = ev.iter().take(20).enumerate().map(|(i, s)| (s - c(3.0 * (i + 1) as f64, 0.0)).norm()).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    Ok((err == 0.0 && secs < 1.0, format!("max |sigma_n - 3n| = {err:e} over n = 1..20, {secs:.3} s (limit 1 s)")))
}

fn perturbative() -> Outcome {
    let t = Instant::now();
    let ev = b0_eigenvalues(&build_hamiltonian(&p(1.0, 0.05), 256)?)?;
    let worst = (1..=4)
        .map(|n| {
            let o = n as f64 + 0.0025 * (n * (3 * n - 1)) as f64;
            (ev[n - 1].re - o).abs() / o
        })
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    Ok((worst <= 0.1 && secs < 5.0, format!("max rel. deviation {worst:.2e} (limit 0.1), {secs:.3} s (limit 5 s)")))
}

fn cross_method() -> Outcome {
    let t = Instant::now();
    let q = p(1.0, 0.5);
    let cfg = PipelineConfig { k: 4, jacobi_trunc: 512, ..PipelineConfig::default() };
    let reports = Method::ALL.iter().map(|m| run_method(*m, &q, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let cmp = compare(&reports, 1e-6, 1e-4, vec![])?;
    let secs = t.elapsed().as_secs_f64();
    let all_compared = cmp.pairs.iter().all(|pc| pc.compared > 0);
    let worst = cmp.pairs.iter().map(|pc| format!("{}/{} {:.1e}", pc.a.tag(), pc.b.tag(), pc.max_rel_delta)).collect::<Vec<_>>().join(", ");
    Ok((cmp.pass && all_compared && secs < 60.0, format!("{worst}; {secs:.2} s (limit 60 s)")))
}

fn reality_and_bound() -> Outcome {
    let tol = SpectralTolerances::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (mu, lam) in [(1.0, 0.05), (1.0, 0.5), (1.0, 1.0), (2.0, 0.5), (1.0, 2.0)] {
        let q = p(mu, lam);
        // strong coupling needs a larger truncation before anything converges
        let n = if lam >= 2.0 { 512 } else { 256 };
        let study = convergence_study(&q, &[n, 2 * n], 10, &tol)?;
        let sig = &study.rows[1].sigmas;
        let n_conv = study.converged.iter().filter(|x| **x).count();
        let real = reality_defect(sig, &study.converged);
        let lb = lower_bound_check(sig, &study.converged, &q, tol.tol_real)?;
        ok &= n_conv > 0 && real <= tol.tol_real && lb.margin >= -tol.tol_real;
        lines.push(format!("({mu}, {lam}) N = {}: {n_conv} conv., im {real:.0e}, min re - mu {:.3}", 2 * n, lb.margin));
    }
    Ok((ok, lines.join("; ")))
}

fn biorthogonality() -> Outcome {
    let q = p(1.0, 0.5);
    let tol = SpectralTolerances::default();
    let pairs = eigen_spectrum(&build_hamiltonian(&q, 256)?, 12)?;
    let study = convergence_study(&q, &[256, 512], 12, &tol)?;
    let first: Vec<_> = pairs.iter().zip(&study.digits).filter(|(_, d)| **d >= 5.0).map(|(e, _)| e.clone()).take(8).collect();
    let b = max_off_diagonal(&biorthogonality_matrix(&first), &first, tol.gap_rel);
    let g = max_off_diagonal(&parity_gram(&first), &first, tol.gap_rel);
    Ok((first.len() == 8 && b <= 1e-8 && g <= 1e-8, format!("{} vectors, bilinear {b:.1e}, parity {g:.1e} (limit 1e-8)", first.len())))
}

fn completeness() -> Outcome {
    let op = build_hamiltonian(&p(1.0, 0.5), 256)?;
    let pairs = eigen_spectrum(&op, 40)?;
    let mut t = CoeffVector::basis(256, 1);
    t.coeffs[2] = c(1.0, 0.0);
    let r = completeness_residual(&op, &pairs, &t, Precision::DoubleDouble)?;
    Ok((r.best < 1e-6 && r.best_k <= 40, format!("best residual {:.2e} at k = {} (limit 1e-6, k <= 40)", r.best, r.best_k)))
}

fn inverse_identity() -> Outcome {
    // H z^n = mu n z^n + i lambda (n (n-1) z^{n-1} + n z^{n+1}) on z = -i s
    let q = p(1.0, 0.5);
    let grid = kernel::positive_grid(&q, 12.0, 4)?;
    let a = kernel::nystrom_matrix(&q, &grid)?;
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let nf = n as f64;
        let h = |s: f64| {
            let z = c(0.0, -s);
            q.mu * nf * z.powi(n) + c(0.0, q.lambda) * (nf * (nf - 1.0) * z.powi(n - 1) + nf * z.powi(n + 1))
        };
        let psi: Vec<Complex64> = grid.nodes.iter().map(|s| h(*s)).collect();
        let r = kernel::apply_with_matrix(&q, &grid, &a, &psi, 1e-8, 6.0)?;
        for (y, u) in r.y.iter().zip(&r.u) {
            if *y <= 6.0 {
                let want = c(0.0, -y).powi(n);
                worst = worst.max((u - want).norm() / want.norm());
            }
        }
    }
    let mut exact = 0.0f64;
    for y in [0.1, 0.5, 1.0, 2.0, 4.0, 6.0] {
        let u = kernel::inverse_at(&q, y, 40.0, |s| c(0.0, -q.mu * s - q.lambda * s * s))?;
        exact = exact.max((u - c(0.0, -y)).norm() / y);
    }
    Ok((worst <= 1e-6 && exact <= 1e-12, format!("z, z^2, z^3 max rel {worst:.1e} (limit 1e-6); z pointwise {exact:.1e} (limit 1e-12)")))
}

fn kernel_positivity() -> Outcome {
    let q = p(1.0, 0.5);
    let grid = kernel::negative_grid(&q, 16.0, 1, 20)?;
    let mut bad = 0usize;
    for (i, &y) in grid.nodes.iter().enumerate() {
        for (j, &s) in grid.nodes.iter().enumerate() {
            let k = grid.at(i, j);
            if k > 0.0 || k.abs() > kernel::dominating_kernel(&q, y, s)? {
                bad += 1;
            }
        }
    }
    let hs = kernel::hs_norm_estimate(&q, 8.0, 3, 1e-4)?;
    let pos = kernel::positive_grid(&q, kernel::default_y_max(q.rho()?), 2)?;
    let s = kernel::nystrom_spectrum(&q, &pos, 1)?;
    let ok = bad == 0 && hs.saturated && s.separation < 1.0;
    Ok((
        ok,
        format!(
            "{bad} sign/domination violations on {} nodes; HS {:.4e}, domain change {:.1e}, mesh change {:.1e} (limit 1e-4); Perron vector positive, |k2|/k1 = {:.3}",
            grid.len(),
            hs.levels.last().map_or(0.0, |l| l.value),
            hs.domain_change,
            hs.mesh_change,
            s.separation
        ),
    ))
}

fn structure() -> Outcome {
    let mut worst = (0usize, 0.0f64, 0.0f64);
    for (mu, lam) in [(1.0, 0.5), (-2.0, 1.3), (0.7, -0.4)] {
        let q = p(mu, lam);
        let op = build_hamiltonian(&q, 128)?;
        worst.0 += usize::from(!op.is_symmetric());
        let d = (parity_conjugate(&op).to_dense() - build_hamiltonian(&q.with_lambda(-lam)?, 128)?.to_dense()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst.1 = worst.1.max(d);
        worst.2 = worst.2.max(laguerre_factorization_residual(&q, 128)?);
    }
    Ok((worst.0 == 0 && worst.1 == 0.0 && worst.2 <= 1e-12, format!("asymmetric: {}, parity defect {:e}, factorization {:.1e} (limit 1e-12)", worst.0, worst.1, worst.2)))
}

fn boundary() -> Outcome {
    let q = p(1.0, 0.5);
    let sturm = halfline::solve(&q, 3, &SturmConfig::default())?;
    let pr = build_problem(&q, sturm.x_max, 4000, None)?;
    let raw = raw_eigenvalues(&pr, 3);
    let mut slopes = Vec::new();
    let mut tails = Vec::new();
    for s in &raw {
        let w = eigenvector(&pr, *s);
        slopes.push(origin_slope(&pr, &w, 10));
        tails.push(tail_fit(&pr, &w, 2.5, 3.5));
    }
    let shots = shoot_lowest(&q, 3, 8.0, 32, &ShootingConfig::default())?;
    let d = shots.iter().map(|r| r.indicator_at_root.abs()).fold(0.0, f64::max);
    let ok = slopes.iter().all(|s| (s - 1.5).abs() <= 0.1) && tails.iter().all(|t| t.spread < 2.0 && t.raw_spread > 5.0) && d < 1e-6;
    Ok((
        ok,
        format!(
            "slopes {:?} (1.5 +- 0.1); tail spread {:?} vs raw {:?}; max |D| {d:.1e} (limit 1e-6)",
            slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            tails.iter().map(|t| format!("{:.2}", t.spread)).collect::<Vec<_>>(),
            tails.iter().map(|t| format!("{:.1}", t.raw_spread)).collect::<Vec<_>>()
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("degenerate spectrum", degenerate),
        ("perturbative agreement", perturbative),
        ("cross-method agreement", cross_method),
        ("reality and lower bound", reality_and_bound),
        ("biorthogonality", biorthogonality),
        ("completeness", completeness),
        ("inverse identity", inverse_identity),
        ("kernel positivity and Hilbert-Schmidt", kernel_positivity),
        ("structure identities", structure),
        ("boundary behaviour", boundary),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
