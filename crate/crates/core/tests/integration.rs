use num_complex::Complex64;

use apartment::experiments::{flat_torus_object, p_surface_basis, p_surface_index};
use apartment::limit_stability::{assemble_stability, fourier_basis, index_count, log_cutoff, normal_variation, q_f};
use apartment::riemann::io::{surface_json, SurfaceDump};
use apartment::riemann::monodromy::{critical_set, eigenform_monodromy_sampled};
use apartment::lie_sl::HitchinBasePoint;
use apartment::riemann::mesh::MeshedSurface;
use apartment::selfdual::{
    bump_variation, convergence_study, decoupling_error, field_csv, HiggsPair2, SolverConfig,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn coarse_p_surface_pipeline() {
    let (ps, rep) = p_surface_index(6, 1e-2).unwrap();
    assert_eq!(rep.lattice_rank, 3);
    assert_eq!(rep.euler_characteristic, -4);
    assert!(rep.q_normal < 0.0);
    assert!(rep.index.index >= 1);
    let text = surface_json(&ps.surface, &[("g0", &ps.g0), ("g1", &ps.g1)]).unwrap();
    let dump: SurfaceDump = serde_json::from_str(&text).unwrap();
    assert_eq!(dump.nodes.len(), ps.surface.len());
    assert_eq!(dump.loops.len(), 6);
    let asm = assemble_stability(&apartment::experiments::p_surface_object(&ps), &p_surface_basis(&ps), "x").unwrap();
    let j = asm.to_json();
    assert_eq!(j["A"].as_array().unwrap().len(), 4);
    assert_eq!(j["B"][0].as_array().unwrap().len(), 4);
}

#[test]
fn cutoff_with_tiny_radius_keeps_sign() {
    let (ps, _) = p_surface_index(6, 1e-2).unwrap();
    let obj = apartment::experiments::p_surface_object(&ps);
    let n = normal_variation(&ps.normals());
    let cut = log_cutoff(&ps.surface, &n, &[ps.grid.index(0, 0, 0)], 0.05).unwrap();
    assert!(q_f(&obj, &cut).unwrap() < 0.0);
}

#[test]
fn flat_index_zero_at_two_resolutions() {
    for n in [8, 12] {
        let obj = flat_torus_object(n).unwrap();
        let rep = index_count(&assemble_stability(&obj, &fourier_basis(&obj.system, 20), "modes").unwrap()).unwrap();
        assert_eq!(rep.index, 0);
    }
}

#[test]
fn sampled_monodromy_on_a_planar_grid() {
    let s = MeshedSurface::planar_grid(-1.0, 1.0, -1.0, 1.0, 41, 41).unwrap();
    let base = HitchinBasePoint::new(vec![s.nodes.iter().map(|n| -(n.coord - c(0.05, 0.05))).collect()]).unwrap();
    let crit = critical_set(&s, &base, 1e-2);
    assert_eq!(crit.len(), 1);
    let boundary = &s.loops[0];
    let p = eigenform_monodromy_sampled(&base, &s, boundary, 1e-9).unwrap();
    assert_eq!(p.0, vec![1, 0]);
}

#[test]
fn solver_config_from_json() {
    let cfg: SolverConfig =
        serde_json::from_str(r#"{"grid_n": 33, "q_spec": [[2.0, 0.0], [1.0, 0.0]], "R": 2.0, "tol": 1e-9, "damping": 0.01}"#)
            .unwrap();
    let (pair, f) = cfg.solve().unwrap();
    assert!(f.residual <= 1e-9);
    let csv = field_csv(&pair, &f);
    let line = csv.lines().nth(1).unwrap();
    assert_eq!(line.split(',').count(), 3);
}

#[test]
fn small_convergence_sweep() {
    let pair = HiggsPair2::unit_square(65, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let x = bump_variation(&pair, c(0.38, 0.38), 0.08);
    let region = pair.annulus(0.3, 0.45);
    let rep = convergence_study(&pair, &x, &[], &[1.0, 2.0, 4.0], 1e-8, &region).unwrap();
    assert!(!rep.exact);
    assert!(rep.rows.windows(2).all(|w| w[1].diff < w[0].diff));
    assert!(rep.rows.windows(2).all(|w| w[1].decoupling_error < w[0].decoupling_error));
    assert!(rep.to_csv().lines().count() == 4);
}

#[test]
fn constant_q_sweep_is_exact() {
    let pair = HiggsPair2::unit_square(33, vec![c(1.0, 0.0)]).unwrap();
    let x = bump_variation(&pair, c(0.1, 0.0), 0.25);
    let region = pair.annulus(0.2, 0.3);
    let rep = convergence_study(&pair, &x, &[], &[1.0, 2.0, 4.0], 1e-9, &region).unwrap();
    assert!(rep.exact && rep.slope.is_none());
    let f = apartment::selfdual::solve_selfduality(&pair, 1.0, 1e-9).unwrap();
    assert!(decoupling_error(&f, &pair, &region).unwrap() < 1e-12);
    assert!(decoupling_error(&f, &pair, &[]).is_err());
}
