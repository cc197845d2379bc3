//! Subcommand drivers: each returns report tables and checks.

use num_complex::Complex64;
use serde_json::json;

use apartment::experiments::{
    cutoff_sweep, decoupling_sweep, dyadic, flat_stability, hitchin_roundtrip, monodromy_suite, p_surface_index,
};
use apartment::limit_stability::DEFAULT_FD_STEP;
use apartment::report::{fmt, Check, Table};
use apartment::riemann::monodromy::Permutation;
use apartment::riemann::psurface::{DEFAULT_CLOSURE_TOL, DEFAULT_RESOLUTION};
use apartment::selfdual::{self, bump_variation, convergence_study, field_csv, parse_q_spec, HiggsPair2};

use crate::config::{self, Params};

pub const CHARPOLY_TOL: f64 = 1e-10;
pub const ROUNDTRIP_TOL: f64 = 1e-8;
pub const CONFORMAL_TOL: f64 = 1e-10;
pub const ORACLE_REL_TOL: f64 = 0.02;
pub const FD_REL_TOL: f64 = 0.01;
pub const DECOUPLING_SLOPE: f64 = -0.3;
pub const DECOUPLING_CORR: f64 = 0.97;

/// Invalid input (exit 2) or numerical failure (exit 1).
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<apartment::Error> for Failure {
    fn from(e: apartment::Error) -> Self {
        match e {
            apartment::Error::Config(m) | apartment::Error::Domain(m) => Failure::Config(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub params: serde_json::Value,
    pub table: Table,
    pub extra: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

fn cfg<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn perm(p: &Permutation) -> String {
    p.0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn hitchin(p: &Params) -> Result<Outcome, Failure> {
    let ns = p.n.clone().unwrap_or_else(|| (2..=6).collect());
    if ns.iter().any(|&n| !(2..=16).contains(&n)) {
        return Err(Failure::Config("n must lie in 2..=16".into()));
    }
    let trials = p.trials.unwrap_or(100);
    if trials == 0 {
        return Err(Failure::Config("trials must be positive".into()));
    }
    let seed = p.seed.unwrap_or(0);
    let rows = hitchin_roundtrip(&ns, trials, seed)?;
    let mut table = Table::new(&["n", "trials", "charpoly_err", "roundtrip_err"]);
    for r in &rows {
        table.push(vec![r.n.to_string(), r.trials.to_string(), fmt(r.charpoly_err), fmt(r.roundtrip_err)]);
    }
    let cp = rows.iter().map(|r| r.charpoly_err).fold(0.0, f64::max);
    let rt = rows.iter().map(|r| r.roundtrip_err).fold(0.0, f64::max);
    Ok(Outcome {
        params: json!({"n": ns, "trials": trials, "seed": seed}),
        table,
        extra: vec![],
        checks: vec![Check::at_most("charpoly_identity", cp, CHARPOLY_TOL), Check::at_most("roundtrip", rt, ROUNDTRIP_TOL)],
    })
}

pub fn monodromy(p: &Params) -> Result<Outcome, Failure> {
    let density = p.density.unwrap_or(32);
    let max_word = p.max_word.unwrap_or(4);
    if density < 8 || max_word == 0 || max_word > 6 {
        return Err(Failure::Config("density must be ≥ 8 and max_word in 1..=6".into()));
    }
    let rep = monodromy_suite(density, max_word, apartment::riemann::monodromy::DEFAULT_ROOT_SEPARATION)?;
    let mut table = Table::new(&["word", "direct", "composed", "refined"]);
    let swap = Permutation(vec![1, 0]);
    table.push(vec!["sqrt".into(), perm(&rep.sqrt_loop), perm(&swap), perm(&rep.sqrt_loop_refined)]);
    table.push(vec!["sqrt^2".into(), perm(&rep.sqrt_doubled), perm(&swap.then(&swap)), perm(&rep.sqrt_doubled_refined)]);
    for w in &rep.words {
        table.push(vec![w.word.clone(), perm(&w.direct), perm(&w.composed), perm(&w.refined)]);
    }
    let mismatches = rep.words.iter().filter(|w| w.direct != w.composed || w.direct != w.refined).count();
    Ok(Outcome {
        params: json!({"density": density, "max_word": max_word}),
        table,
        extra: vec![],
        checks: vec![
            Check::flag("sqrt_transposition", rep.sqrt_loop == swap && rep.sqrt_loop_refined == swap),
            Check::flag("sqrt_doubled_identity", rep.sqrt_doubled.is_identity() && rep.sqrt_doubled_refined.is_identity()),
            Check::at_most("groupoid_mismatches", mismatches as f64, 0.0),
        ],
    })
}

pub fn flat(p: &Params) -> Result<Outcome, Failure> {
    let torus_n = p.torus_n.unwrap_or(16);
    let modes = p.modes.unwrap_or(50);
    if torus_n < 3 || modes == 0 {
        return Err(Failure::Config("torus_n must be ≥ 3 and modes positive".into()));
    }
    let rep = flat_stability(torus_n, modes)?;
    let mut table = Table::new(&["case", "dim", "index", "min_eig"]);
    table.push(vec!["flat-torus".into(), rep.dim.to_string(), rep.index.to_string(), fmt(rep.min_eig)]);
    Ok(Outcome {
        params: json!({"torus_n": torus_n, "modes": modes}),
        table,
        extra: vec![],
        checks: vec![Check::at_most("index", rep.index as f64, 0.0)],
    })
}

pub fn p_surface(p: &Params) -> Result<Outcome, Failure> {
    let res = cfg(config::resolution(p.resolution.unwrap_or(DEFAULT_RESOLUTION)))?;
    let step = cfg(config::positive("fd_step", p.fd_step.unwrap_or(DEFAULT_FD_STEP)))?;
    let (ps, r) = p_surface_index(res, step)?;
    let mut table = Table::new(&["case", "dim", "index", "min_eig"]);
    table.push(vec!["normal+translations".into(), r.index.dim.to_string(), r.index.index.to_string(), fmt(r.index.min_eig)]);
    let mut metrics = Table::new(&["name", "value"]);
    for (k, v) in [
        ("nodes", r.nodes as f64),
        ("theta", r.theta),
        ("closure_defect", r.defect),
        ("lattice_rank", r.lattice_rank as f64),
        ("euler_characteristic", r.euler_characteristic as f64),
        ("conformality", r.conformality),
        ("q_normal", r.q_normal),
        ("curvature_oracle", r.oracle),
        ("fd_second_variation", r.fd_value),
    ] {
        metrics.push(vec![k.into(), fmt(v)]);
    }
    let sweep = cutoff_sweep(&ps, ps.grid.index(0, 0, 0), &dyadic(0.4, 5))?;
    let mut cut = Table::new(&["delta", "q_f"]);
    for (d, q) in &sweep {
        cut.push(vec![fmt(*d), fmt(*q)]);
    }
    Ok(Outcome {
        params: json!({"resolution": res, "fd_step": step}),
        table,
        extra: vec![
            ("p-surface-index_metrics.csv".into(), metrics.to_csv()),
            ("p-surface-index_cutoff.csv".into(), cut.to_csv()),
        ],
        checks: vec![
            Check::at_most("closure_defect", r.defect, DEFAULT_CLOSURE_TOL),
            Check::flag("lattice_rank_3", r.lattice_rank == 3),
            Check::flag("euler_characteristic_-4", r.euler_characteristic == -4),
            Check::at_most("conformality", r.conformality, CONFORMAL_TOL),
            Check::at_most("q_normal", r.q_normal, 0.0),
            Check::at_most("oracle_rel_err", r.rel_err, ORACLE_REL_TOL),
            Check::at_most("fd_rel_err", r.fd_rel_err, FD_REL_TOL),
            Check::at_least("index", r.index.index as f64, 1.0),
        ],
    })
}

struct SweepSetup {
    pair: HiggsPair2,
    r_list: Vec<f64>,
    tol: f64,
    grid_n: usize,
    q: String,
    annulus: Vec<f64>,
    bump: Vec<f64>,
}

fn sweep_setup(p: &Params) -> Result<SweepSetup, Failure> {
    let grid_n = p.grid_n.unwrap_or(selfdual::DEFAULT_GRID);
    let r_list = cfg(config::r_list(&p.r_list.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]), grid_n))?;
    let tol = cfg(config::positive("tol", p.tol.unwrap_or(selfdual::DEFAULT_TOL)))?;
    let q = p.q.clone().unwrap_or_else(|| "z".into());
    let annulus = p.annulus.clone().unwrap_or_else(|| vec![0.3, 0.45]);
    if annulus.len() != 2 || !(0.0 <= annulus[0] && annulus[0] < annulus[1]) {
        return Err(Failure::Config("annulus needs two increasing radii".into()));
    }
    let bump = p.bump.clone().unwrap_or_else(|| vec![0.38, 0.38, 0.08]);
    if bump.len() != 3 || bump[2] <= 0.0 {
        return Err(Failure::Config("bump needs x, y, radius".into()));
    }
    let pair = HiggsPair2::unit_square(grid_n, parse_q_spec(&q)?)?;
    Ok(SweepSetup { pair, r_list, tol, grid_n, q, annulus, bump })
}

pub fn decoupling(p: &Params) -> Result<Outcome, Failure> {
    let s = sweep_setup(p)?;
    let region = s.pair.annulus(s.annulus[0], s.annulus[1]);
    let x = bump_variation(&s.pair, Complex64::new(s.bump[0], s.bump[1]), s.bump[2]);
    let (rows, fit) = decoupling_sweep(&s.pair, &s.r_list, s.tol, &region, &x)?;
    let mut table = Table::new(&[
        "R", "iterations", "residual", "decoupling_error", "profile_gap", "adjoint_gap", "derivative_gap", "norm_gap",
    ]);
    for r in &rows {
        table.push(vec![
            fmt(r.r),
            r.iterations.to_string(),
            fmt(r.residual),
            fmt(r.decoupling_error),
            fmt(r.profile_gap),
            fmt(r.adjoint_gap),
            fmt(r.derivative_gap),
            fmt(r.norm_gap),
        ]);
    }
    let mut extra = Vec::new();
    if p.dump_fields.unwrap_or(false) {
        for &r in &s.r_list {
            let f = selfdual::solve_selfduality(&s.pair, r, s.tol)?;
            extra.push((format!("decoupling_u_R{r}.csv"), field_csv(&s.pair, &f)));
        }
    }
    let worst_res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let gaps: Vec<f64> = rows.iter().map(|r| r.profile_gap).collect();
    Ok(Outcome {
        params: json!({"grid_n": s.grid_n, "q": s.q, "R": s.r_list, "tol": s.tol, "annulus": s.annulus, "bump": s.bump}),
        table,
        extra,
        checks: vec![
            Check::at_most("solver_residual", worst_res, s.tol),
            Check::at_most("decoupling_slope", fit.slope, DECOUPLING_SLOPE),
            Check::at_least("decoupling_abs_correlation", fit.correlation.abs(), DECOUPLING_CORR),
            Check::flag("profile_gap_non_increasing", gaps.windows(2).all(|w| w[1] <= w[0])),
            Check { name: "common_gap_rate".into(), value: fit.common_rate, threshold: 0.0, pass: fit.common_rate > 0.0 },
        ],
    })
}

pub fn convergence(p: &Params) -> Result<Outcome, Failure> {
    let s = sweep_setup(p)?;
    let region = s.pair.annulus(s.annulus[0], s.annulus[1]);
    let x = bump_variation(&s.pair, Complex64::new(s.bump[0], s.bump[1]), s.bump[2]);
    let basis = index_basis(&s.pair, s.bump[2]);
    let rep = convergence_study(&s.pair, &x, &basis, &s.r_list, s.tol, &region)?;
    let mut table = Table::new(&["R", "q_hr", "q_f", "diff", "slope_so_far", "commutator_term", "decoupling_error"]);
    for line in rep.to_csv().lines().skip(1) {
        table.push(line.split(',').map(String::from).collect());
    }
    let mut idx = Table::new(&["R", "index_hr", "index_qf"]);
    for r in &rep.rows {
        idx.push(vec![fmt(r.r), r.index_hr.to_string(), rep.index_qf.to_string()]);
    }
    let diffs: Vec<f64> = rep.rows.iter().map(|r| r.diff).collect();
    let comms: Vec<f64> = rep.rows.iter().map(|r| r.commutator_term).collect();
    let mut checks = vec![Check::flag("liminf_index_window", rep.liminf_holds)];
    if rep.exact {
        checks.push(Check::flag("exact", true));
    } else {
        checks.push(Check::flag("diff_strictly_decreasing", strictly_decreasing(&diffs)));
        checks.push(Check::flag("commutator_strictly_decreasing", strictly_decreasing(&comms)));
    }
    Ok(Outcome {
        params: json!({"grid_n": s.grid_n, "q": s.q, "R": s.r_list, "tol": s.tol, "bump": s.bump, "basis": basis.len()}),
        table,
        extra: vec![("convergence_index.csv".into(), idx.to_csv())],
        checks,
    })
}

/// Five bumps off the branch cut, clear of the origin.
pub fn index_basis(pair: &HiggsPair2, radius: f64) -> Vec<apartment::limit_stability::Variation> {
    [(0.38, 0.38), (0.3, -0.3), (0.0, 0.38), (0.0, -0.38), (0.38, 0.0)]
        .iter()
        .map(|&(a, b)| bump_variation(pair, Complex64::new(a, b), radius))
        .collect()
}
