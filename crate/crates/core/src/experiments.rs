//! Reproducible experiment drivers shared by the command line and the tests.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_sl::{characteristic_coefficients, companion_matrix, faddeev_leverrier, InvariantPolynomialBasis, ToralElement};
use crate::limit_stability::{
    assemble_stability, fd_second_variation, fourier_basis, index_count, log_cutoff, normal_variation, q_f,
    scalar_times, IndexReport, LimitingObject, Variation,
};
use crate::poly;
use crate::riemann::forms::{conformality_residual, EigenFormSystem, FormField};
use crate::riemann::mesh::MeshedSurface;
use crate::riemann::monodromy::{concat, eigenform_monodromy, lasso, refine, Permutation};
use crate::riemann::psurface::{build_p_surface, PSurface};
use crate::selfdual::{
    decoupling_error, decoupling_gaps, linear_fit, profile_gap, solve_with, HiggsPair2, SolverOptions,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripRow {
    pub n: usize,
    pub trials: usize,
    /// Coefficient mismatch of the invariant-polynomial expansion vs the root product.
    pub charpoly_err: f64,
    /// Coefficient mismatch of the companion realization.
    pub roundtrip_err: f64,
}

/// Random traceless diagonal with standard complex Gaussian entries.
pub fn random_traceless(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut e: Vec<Complex64> = (0..n).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let mean = e.iter().sum::<Complex64>() / n as f64;
    for x in &mut e {
        *x -= mean;
    }
    e
}

pub fn hitchin_roundtrip(ns: &[usize], trials: usize, seed: u64) -> Result<Vec<RoundTripRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        let basis = InvariantPolynomialBasis::new(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(n as u64));
        let mut row = RoundTripRow { n, trials, charpoly_err: 0.0, roundtrip_err: 0.0 };
        for _ in 0..trials {
            let entries = random_traceless(n, &mut rng);
            let lambda = ToralElement::new(entries.clone())?;
            let coeffs = characteristic_coefficients(&lambda);
            row.charpoly_err = row.charpoly_err.max(max_diff(&coeffs, &poly::from_roots(&entries)));
            let alpha = basis.evaluate(&lambda)?;
            let comp = faddeev_leverrier(&companion_matrix(&alpha));
            row.roundtrip_err = row.roundtrip_err.max(max_diff(&comp, &coeffs));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordRow {
    pub word: String,
    pub direct: Permutation,
    pub composed: Permutation,
    pub refined: Permutation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyReport {
    pub sqrt_loop: Permutation,
    pub sqrt_doubled: Permutation,
    pub sqrt_loop_refined: Permutation,
    pub sqrt_doubled_refined: Permutation,
    /// Generators about the two branch points of the cubic model.
    pub generators: Vec<Permutation>,
    pub words: Vec<WordRow>,
}

impl MonodromyReport {
    pub fn words_consistent(&self) -> bool {
        self.words.iter().all(|w| w.direct == w.composed && w.direct == w.refined)
    }
}

/// Cubic model z³ − 3z + 2w, branched over w = ±1.
pub fn cubic_model(w: Complex64) -> Vec<Complex64> {
    vec![c(-3.0, 0.0), -2.0 * w]
}

pub fn sqrt_model(w: Complex64) -> Vec<Complex64> {
    vec![-w]
}

/// Square-root checks and the groupoid test over words of length ≤ `max_len`
/// in the loops a, b about w = 1 and w = −1 and their inverses (A, B).
pub fn monodromy_suite(density: usize, max_len: usize, separation: f64) -> Result<MonodromyReport> {
    let loop0 = lasso(c(0.4, 0.3), c(0.0, 0.0), 0.25, density);
    let doubled = concat(&[loop0.clone(), loop0.clone()]);
    let sqrt_loop = eigenform_monodromy(sqrt_model, &loop0, separation)?;
    let sqrt_doubled = eigenform_monodromy(sqrt_model, &doubled, separation)?;
    let sqrt_loop_refined = eigenform_monodromy(sqrt_model, &refine(&loop0, 10), separation)?;
    let sqrt_doubled_refined = eigenform_monodromy(sqrt_model, &refine(&doubled, 10), separation)?;

    let base = c(0.0, 0.0);
    let a = lasso(base, c(1.0, 0.0), 0.5, density);
    let b = lasso(base, c(-1.0, 0.0), 0.5, density);
    let rev = |p: &Vec<Complex64>| p.iter().rev().copied().collect::<Vec<_>>();
    let letters = [('a', a.clone()), ('b', b.clone()), ('A', rev(&a)), ('B', rev(&b))];
    let gens: Vec<Permutation> =
        letters.iter().map(|(_, p)| eigenform_monodromy(cubic_model, p, separation)).collect::<Result<_>>()?;
    let mut words = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    while let Some(word) = stack.pop() {
        let path = concat(&word.iter().map(|&i| letters[i].1.clone()).collect::<Vec<_>>());
        let direct = eigenform_monodromy(cubic_model, &path, separation)?;
        let refined = eigenform_monodromy(cubic_model, &refine(&path, 10), separation)?;
        let composed = word.iter().skip(1).fold(gens[word[0]].clone(), |acc, &i| acc.then(&gens[i]));
        words.push(WordRow { word: word.iter().map(|&i| letters[i].0).collect(), direct, composed, refined });
        if word.len() < max_len {
            for i in 0..4 {
                let mut w = word.clone();
                w.push(i);
                stack.push(w);
            }
        }
    }
    words.sort_by(|x, y| (x.word.len(), &x.word).cmp(&(y.word.len(), &y.word)));
    Ok(MonodromyReport {
        sqrt_loop,
        sqrt_doubled,
        sqrt_loop_refined,
        sqrt_doubled_refined,
        generators: gens[..2].to_vec(),
        words,
    })
}

/// Constant regular semisimple φ = (1, i, −1, −i) on the unit torus.
pub fn flat_torus_object(n: usize) -> Result<LimitingObject> {
    let s = Arc::new(MeshedSurface::flat_torus(n)?);
    let vals = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
    let forms = vals.iter().map(|&v| FormField::holomorphic(vec![v; s.len()])).collect();
    let sys = EigenFormSystem::new(s, forms, vec![1; 4], 8.0, true)?;
    Ok(LimitingObject::untwisted(sys))
}

/// Planar m = 2 system φ = (1, i) on the torus, for which area is exactly
/// quadratic along linear paths.
pub fn flat_planar_object(n: usize) -> Result<LimitingObject> {
    let s = Arc::new(MeshedSurface::flat_torus(n)?);
    let forms = vec![FormField::holomorphic(vec![c(1.0, 0.0); s.len()]), FormField::holomorphic(vec![c(0.0, 1.0); s.len()])];
    let sys = EigenFormSystem::new(s, forms, vec![1, 1], 1.0, false)?;
    Ok(LimitingObject::untwisted(sys))
}

pub fn flat_stability(grid: usize, modes: usize) -> Result<IndexReport> {
    let obj = flat_torus_object(grid)?;
    let basis = fourier_basis(&obj.system, modes);
    if basis.len() < modes {
        return Err(Error::Basis(format!("only {} modes available", basis.len())));
    }
    index_count(&assemble_stability(&obj, &basis, &format!("{modes} Fourier modes"))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PSurfaceReport {
    pub resolution: usize,
    pub nodes: usize,
    pub theta: f64,
    pub defect: f64,
    pub lattice_rank: usize,
    pub euler_characteristic: i64,
    pub conformality: f64,
    pub q_normal: f64,
    pub oracle: f64,
    pub rel_err: f64,
    pub fd_step: f64,
    pub fd_value: f64,
    pub fd_rel_err: f64,
    pub index: IndexReport,
}

/// The P surface as a limiting object with trivial monodromy.
pub fn p_surface_object(ps: &PSurface) -> LimitingObject {
    LimitingObject::untwisted(ps.system.clone())
}

/// Normal variation plus the three translations.
pub fn p_surface_basis(ps: &PSurface) -> Vec<Variation> {
    let n = ps.surface.len();
    let mut basis = vec![normal_variation(&ps.normals())];
    for k in 0..3 {
        let mut dir = vec![0.0; 3];
        dir[k] = 1.0;
        basis.push(scalar_times(&vec![1.0; n], &dir));
    }
    basis
}

pub fn p_surface_index(resolution: usize, fd_step: f64) -> Result<(PSurface, PSurfaceReport)> {
    let ps = build_p_surface(resolution)?;
    let obj = p_surface_object(&ps);
    let normal = normal_variation(&ps.normals());
    let q_normal = q_f(&obj, &normal)?;
    let oracle = ps.total_curvature_oracle();
    let fd_value = fd_second_variation(&obj, &normal, fd_step)?;
    let index = index_count(&assemble_stability(&obj, &p_surface_basis(&ps), "normal + translations")?)?;
    let report = PSurfaceReport {
        resolution,
        nodes: ps.surface.len(),
        theta: ps.theta,
        defect: ps.defect,
        lattice_rank: ps.lattice_rank,
        euler_characteristic: ps.surface.euler_characteristic(),
        conformality: conformality_residual(&ps.system),
        q_normal,
        oracle,
        rel_err: ((q_normal - oracle) / oracle).abs(),
        fd_step,
        fd_value,
        fd_rel_err: ((fd_value - q_normal) / q_normal).abs(),
        index,
    };
    Ok((ps, report))
}

/// q_f of the log-cut normal variation along the given radii.
pub fn cutoff_sweep(ps: &PSurface, puncture: usize, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let obj = p_surface_object(ps);
    let normal = normal_variation(&ps.normals());
    deltas
        .iter()
        .map(|&d| Ok((d, q_f(&obj, &log_cutoff(&ps.surface, &normal, &[puncture], d)?)?)))
        .collect()
}

/// Dyadic radii δ₀, δ₀/2, … (`count` entries).
pub fn dyadic(delta0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| delta0 / (1u64 << k) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingRow {
    pub r: f64,
    pub iterations: usize,
    pub residual: f64,
    pub decoupling_error: f64,
    pub profile_gap: f64,
    pub adjoint_gap: f64,
    pub derivative_gap: f64,
    pub norm_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingFit {
    pub slope: f64,
    pub correlation: f64,
    pub gap_slopes: [f64; 3],
    /// min over the three gap decay rates; positive when all decay.
    pub common_rate: f64,
}

pub fn decoupling_sweep(
    pair: &HiggsPair2,
    r_list: &[f64],
    tol: f64,
    region: &[usize],
    x: &Variation,
) -> Result<(Vec<DecouplingRow>, DecouplingFit)> {
    let mut rows = Vec::new();
    let mut guess: Option<Vec<f64>> = None;
    for &r in r_list {
        let mut opts = SolverOptions::with_tol(tol);
        opts.initial_u = guess.take();
        let f = solve_with(pair, r, &opts)?;
        let g = decoupling_gaps(&f, pair, x)?;
        rows.push(DecouplingRow {
            r,
            iterations: f.iterations,
            residual: f.residual,
            decoupling_error: decoupling_error(&f, pair, region)?,
            profile_gap: profile_gap(&f, pair, region),
            adjoint_gap: g.adjoint,
            derivative_gap: g.derivative,
            norm_gap: g.norm,
        });
        guess = Some(f.u);
    }
    let logs = |sel: &dyn Fn(&DecouplingRow) -> f64| rows.iter().map(|r| sel(r).ln()).collect::<Vec<_>>();
    let (slope, _, correlation) = linear_fit(r_list, &logs(&|r| r.decoupling_error));
    let gap_slopes = [
        linear_fit(r_list, &logs(&|r| r.adjoint_gap)).0,
        linear_fit(r_list, &logs(&|r| r.derivative_gap)).0,
        linear_fit(r_list, &logs(&|r| r.norm_gap)).0,
    ];
    let common_rate = gap_slopes.iter().map(|s| -s).fold(f64::INFINITY, f64::min);
    Ok((rows, DecouplingFit { slope, correlation, gap_slopes, common_rate }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_small() {
        let rows = hitchin_roundtrip(&[2, 3], 10, 7).unwrap();
        assert!(rows.iter().all(|r| r.charpoly_err < 1e-12 && r.roundtrip_err < 1e-12));
        assert_eq!(rows, hitchin_roundtrip(&[2, 3], 10, 7).unwrap());
    }

    #[test]
    fn cubic_generators_are_distinct_transpositions() {
        let rep = monodromy_suite(40, 2, 1e-9).unwrap();
        assert_eq!(rep.sqrt_loop, Permutation(vec![1, 0]));
        assert!(rep.sqrt_doubled.is_identity());
        let (a, b) = (&rep.generators[0], &rep.generators[1]);
        assert!(!a.is_identity() && a.then(a).is_identity());
        assert!(!b.is_identity() && b.then(b).is_identity());
        assert_ne!(a, b);
        assert_eq!(rep.words.len(), 4 + 16);
        assert!(rep.words_consistent());
    }

    #[test]
    fn dyadic_radii() {
        assert_eq!(dyadic(0.4, 3), vec![0.4, 0.2, 0.1]);
    }
}
