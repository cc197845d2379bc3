//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apartment::experiments::{
    cutoff_sweep, decoupling_sweep, dyadic, flat_planar_object, flat_stability, flat_torus_object, hitchin_roundtrip,
    monodromy_suite, p_surface_basis, p_surface_object,
};
use apartment::limit_stability::{
    assemble_stability, fd_second_variation, fourier_basis, index_count, normal_variation, q_f, Variation,
};
use apartment::riemann::forms::{conformality_residual, weierstrass_forms};
use apartment::riemann::mesh::MeshedSurface;
use apartment::riemann::monodromy::{Permutation, DEFAULT_ROOT_SEPARATION};
use apartment::riemann::psurface::{build_p_surface, PSurface, DEFAULT_CLOSURE_TOL, DEFAULT_RESOLUTION};
use apartment::selfdual::{bump_variation, convergence_study, solve_selfduality, HiggsPair2};

const SEED: u64 = 20_240_601;
const CHARPOLY_TOL: f64 = 1e-10;
const ROUNDTRIP_TOL: f64 = 1e-8;
const CONFORMAL_TOL: f64 = 1e-10;
const ORACLE_REL_TOL: f64 = 0.02;
const FD_REL_TOL: f64 = 0.01;
const FD_FLAT_ABS_TOL: f64 = 1e-8;
const FD_HALVING_REL_TOL: f64 = 1e-8;
const FLAT_INDEX_REL_TOL: f64 = 1e-8;
const SOLVER_TOL: f64 = 1e-8;
const EXACT_RECOVERY_TOL: f64 = 1e-8;
const DECOUPLING_SLOPE: f64 = -0.3;
const DECOUPLING_CORR: f64 = 0.97;
const GRID: usize = 129;
const R_LIST: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1() -> Outcome {
    let rows = hitchin_roundtrip(&[2, 3, 4, 5, 6], 100, SEED).unwrap();
    let err = rows.iter().map(|r| r.charpoly_err).fold(0.0, f64::max);
    outcome(err <= CHARPOLY_TOL, format!("max coefficient mismatch {err:.3e} (tol {CHARPOLY_TOL:e})"))
}

fn c2() -> Outcome {
    let rows = hitchin_roundtrip(&[2, 3, 4, 5, 6], 100, SEED + 1).unwrap();
    let err = rows.iter().map(|r| r.roundtrip_err).fold(0.0, f64::max);
    outcome(err <= ROUNDTRIP_TOL, format!("max round-trip error {err:.3e} (tol {ROUNDTRIP_TOL:e})"))
}

fn c3(ps: &PSurface) -> Outcome {
    let s = Arc::new(MeshedSurface::planar_grid(-1.0, 1.0, -1.0, 1.0, 41, 41).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        // g = a + b z with |a| > √2 |b| has no zero on the square; dh polynomial.
        let b = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = Complex64::from_polar(1.5 * b.norm() * 2f64.sqrt() + rng.random_range(0.1..1.0), rng.random_range(0.0..2.0 * PI));
        let h: Vec<Complex64> = (0..3).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let theta = rng.random_range(0.0..2.0 * PI);
        let g: Vec<Complex64> = s.nodes.iter().map(|n| a + b * n.coord).collect();
        let dh: Vec<Complex64> = s.nodes.iter().map(|n| h[0] + h[1] * n.coord + h[2] * n.coord * n.coord).collect();
        let sys = weierstrass_forms(s.clone(), &g, &dh, theta).unwrap();
        worst = worst.max(conformality_residual(&sys));
    }
    let p = conformality_residual(&ps.system);
    outcome(
        worst <= CONFORMAL_TOL && p <= CONFORMAL_TOL,
        format!("random data {worst:.3e}, P surface {p:.3e} (tol {CONFORMAL_TOL:e})"),
    )
}

fn c4(ps: &PSurface) -> Outcome {
    let chi = ps.surface.euler_characteristic();
    let pass = ps.defect <= DEFAULT_CLOSURE_TOL && ps.lattice_rank == 3 && chi == -4;
    outcome(
        pass,
        format!("defect {:.3e} at theta {:.4}, lattice rank {}, chi {chi}", ps.defect, ps.theta, ps.lattice_rank),
    )
}

fn c5(ps: &PSurface) -> Outcome {
    let obj = p_surface_object(ps);
    let q = q_f(&obj, &normal_variation(&ps.normals())).unwrap();
    let oracle = ps.total_curvature_oracle();
    let gauss_bonnet = 4.0 * PI * ps.surface.euler_characteristic() as f64;
    let rel = ((q - oracle) / oracle).abs();
    let rel_gb = ((q - gauss_bonnet) / gauss_bonnet).abs();
    let idx = index_count(&assemble_stability(&obj, &p_surface_basis(ps), "normal + translations").unwrap()).unwrap();
    outcome(
        q < 0.0 && rel <= ORACLE_REL_TOL && rel_gb <= ORACLE_REL_TOL && idx.index >= 1,
        format!(
            "q_f(N) {q:.6}, oracle {oracle:.6} (rel {rel:.2e}), 4πχ {gauss_bonnet:.6} (rel {rel_gb:.2e}), index {}",
            idx.index
        ),
    )
}

fn c6(ps: &PSurface) -> Outcome {
    let obj = p_surface_object(ps);
    let n = normal_variation(&ps.normals());
    let q = q_f(&obj, &n).unwrap();
    let fd = fd_second_variation(&obj, &n, 1e-2).unwrap();
    let rel_p = ((fd - q) / q).abs();

    // Planar m = 2: the area is exactly quadratic in t. The form itself
    // integrates a Jacobian and nearly cancels, so the halving ratio is taken
    // against the Dirichlet scale 4κ∫Σ r|X_z|² of the variation.
    let flat = flat_planar_object(24).unwrap();
    let basis = fourier_basis(&flat.system, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut abs_err: f64 = 0.0;
    let mut halving: f64 = 0.0;
    for _ in 0..5 {
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Variation::combination(&basis, &coeffs);
        let qx = q_f(&flat, &x).unwrap();
        let (a, b) = (fd_second_variation(&flat, &x, 1e-3).unwrap(), fd_second_variation(&flat, &x, 5e-4).unwrap());
        abs_err = abs_err.max((a - qx).abs());
        halving = halving.max((a - b).abs() / dirichlet_scale(&flat, &x));
    }
    // Constant regular semisimple sl(4) field: not quadratic, checked like the P surface.
    let sl4 = flat_torus_object(24).unwrap();
    let modes = fourier_basis(&sl4.system, 12);
    let mut rel_sl4: f64 = 0.0;
    for _ in 0..3 {
        let coeffs: Vec<f64> = (0..modes.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Variation::combination(&modes, &coeffs);
        let qx = q_f(&sl4, &x).unwrap();
        rel_sl4 = rel_sl4.max(((fd_second_variation(&sl4, &x, 1e-3).unwrap() - qx) / qx).abs());
    }
    outcome(
        rel_p <= FD_REL_TOL && rel_sl4 <= FD_REL_TOL && abs_err <= FD_FLAT_ABS_TOL && halving <= FD_HALVING_REL_TOL,
        format!("P rel {rel_p:.2e}; sl4 torus rel {rel_sl4:.2e}; planar torus abs {abs_err:.2e}, t vs t/2 rel {halving:.2e}"),
    )
}

fn dirichlet_scale(obj: &apartment::limit_stability::LimitingObject, x: &Variation) -> f64 {
    let sys = &obj.system;
    let s = &sys.surface;
    let mut total = 0.0;
    for k in 0..s.len() {
        let e: f64 = x.values.iter().zip(&sys.r).map(|(v, &r)| r as f64 * s.dz_real_at(v, k).norm_sqr()).sum();
        total += s.weights[k] * e;
    }
    4.0 * sys.kappa * total
}

fn c7() -> Outcome {
    let obj = flat_torus_object(16).unwrap();
    let basis = fourier_basis(&obj.system, 50);
    let asm = assemble_stability(&obj, &basis, "50 Fourier modes").unwrap();
    let a_norm = SymmetricEigen::new(asm.a.clone()).eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rep = index_count(&asm).unwrap();
    let cli = flat_stability(16, 50).unwrap();
    outcome(
        rep.index == 0 && cli.index == 0 && rep.min_eig >= -FLAT_INDEX_REL_TOL * a_norm,
        format!("dim {}, index {}, min eigenvalue {:.3e}, ‖A‖ {a_norm:.3e}", rep.dim, rep.index, rep.min_eig),
    )
}

fn c8() -> Outcome {
    let rep = monodromy_suite(32, 4, DEFAULT_ROOT_SEPARATION).unwrap();
    let swap = Permutation(vec![1, 0]);
    let sqrt_ok = rep.sqrt_loop == swap && rep.sqrt_loop_refined == swap;
    let doubled_ok = rep.sqrt_doubled.is_identity() && rep.sqrt_doubled_refined.is_identity();
    let bad = rep.words.iter().filter(|w| w.direct != w.composed || w.direct != w.refined).count();
    outcome(
        sqrt_ok && doubled_ok && bad == 0 && rep.words.len() == 340,
        format!("transposition {sqrt_ok}, doubled identity {doubled_ok}, {} words, {bad} mismatches", rep.words.len()),
    )
}

fn c9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut exact: f64 = 0.0;
    for (name, q) in [("1", vec![c(1.0, 0.0)]), ("z+2", vec![c(2.0, 0.0), c(1.0, 0.0)]), ("z", vec![c(0.0, 0.0), c(1.0, 0.0)])] {
        let pair = HiggsPair2::unit_square(GRID, q).unwrap();
        for r in R_LIST {
            let t = Instant::now();
            let f = match solve_selfduality(&pair, r, SOLVER_TOL) {
                Ok(f) => f,
                Err(e) => return outcome(false, format!("q = {name}, R = {r}: {e}")),
            };
            slowest = slowest.max(t.elapsed());
            worst = worst.max(f.residual);
            if name == "z+2" {
                exact = exact.max((0..pair.len()).map(|k| (f.u[k] - pair.balanced(k)).abs()).fold(0.0, f64::max));
            }
        }
    }
    outcome(
        worst <= SOLVER_TOL && exact <= EXACT_RECOVERY_TOL && slowest < Duration::from_secs(120),
        format!("max residual {worst:.2e}, z+2 sup error {exact:.2e}, slowest solve {slowest:.2?}"),
    )
}

fn z_pair() -> HiggsPair2 {
    HiggsPair2::unit_square(GRID, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
}

fn c10() -> Outcome {
    let pair = z_pair();
    let region = pair.annulus(0.3, 0.45);
    let x = bump_variation(&pair, c(0.38, 0.38), 0.08);
    let (rows, fit) = decoupling_sweep(&pair, &R_LIST, SOLVER_TOL, &region, &x).unwrap();
    let series = |f: &dyn Fn(&apartment::experiments::DecouplingRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let gaps_decrease = strictly_decreasing(&series(&|r| r.adjoint_gap))
        && strictly_decreasing(&series(&|r| r.derivative_gap))
        && strictly_decreasing(&series(&|r| r.norm_gap));
    let profile = series(&|r| r.profile_gap);
    outcome(
        fit.slope <= DECOUPLING_SLOPE
            && fit.correlation.abs() >= DECOUPLING_CORR
            && gaps_decrease
            && fit.common_rate > 0.0
            && profile.windows(2).all(|w| w[1] <= w[0]),
        format!(
            "slope {:.4}, |r| {:.5}; gap slopes (i) {:.3} (iii) {:.3} (iv) {:.3}, common rate {:.3}",
            fit.slope,
            fit.correlation.abs(),
            fit.gap_slopes[0],
            fit.gap_slopes[1],
            fit.gap_slopes[2],
            fit.common_rate
        ),
    )
}

fn c11() -> Outcome {
    let pair = z_pair();
    let x = bump_variation(&pair, c(0.38, 0.38), 0.08);
    let basis: Vec<Variation> = [(0.38, 0.38), (0.3, -0.3), (0.0, 0.38), (0.0, -0.38), (0.38, 0.0)]
        .iter()
        .map(|&(a, b)| bump_variation(&pair, c(a, b), 0.08))
        .collect();
    let rep = convergence_study(&pair, &x, &basis, &R_LIST, SOLVER_TOL, &[]).unwrap();
    let diffs: Vec<f64> = rep.rows.iter().map(|r| r.diff).collect();
    let comm: Vec<f64> = rep.rows.iter().map(|r| r.commutator_term).collect();
    let idx: Vec<usize> = rep.rows.iter().map(|r| r.index_hr).collect();
    outcome(
        !rep.exact && strictly_decreasing(&diffs) && strictly_decreasing(&comm) && rep.liminf_holds,
        format!(
            "diffs {:?}, commutator {:?}, Q_f index {}, Q_R indices {idx:?}",
            diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            comm.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            rep.index_qf
        ),
    )
}

fn c12(ps: &PSurface) -> Outcome {
    let obj = p_surface_object(ps);
    let full = q_f(&obj, &normal_variation(&ps.normals())).unwrap();
    let sweep = cutoff_sweep(ps, ps.grid.index(0, 0, 0), &dyadic(0.4, 5)).unwrap();
    let gaps: Vec<f64> = sweep.iter().map(|(_, q)| (q - full).abs()).collect();
    let negative = sweep.iter().rev().take(3).all(|(_, q)| *q < 0.0);
    outcome(
        strictly_decreasing(&gaps) && negative,
        format!(
            "q_f(N) {full:.4}; cutoff values {:?}",
            sweep.iter().map(|(d, q)| format!("{d}:{q:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, budget: Duration, run: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = run();
        let dt = t.elapsed();
        let pass = o.pass && dt <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}  [{dt:.2?} / budget {budget:.0?}] {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    let t = Instant::now();
    let ps = build_p_surface(DEFAULT_RESOLUTION).expect("P surface construction");
    let build = t.elapsed();
    println!("P surface: {} nodes built in {build:.2?}", ps.surface.len());
    let secs = Duration::from_secs;
    report(1, secs(1), &c1);
    report(2, secs(1), &c2);
    report(3, secs(10), &|| c3(&ps));
    report(4, secs(300).saturating_sub(build), &|| c4(&ps));
    report(5, secs(300).saturating_sub(build), &|| c5(&ps));
    report(6, secs(60), &|| c6(&ps));
    report(7, secs(30), &c7);
    report(8, secs(10), &c8);
    report(9, secs(24 * 120), &c9);
    report(10, secs(600), &c10);
    report(11, secs(900), &c11);
    report(12, secs(120), &|| c12(&ps));
    if failed == 0 {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
