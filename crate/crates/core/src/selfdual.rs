//! Rank-2 self-duality model: Higgs field Φ = [[0, 1], [q, 0]] dz on a square,
//! diagonal harmonic metric H = diag(e^u, e^{−u}) for R·Φ, decoupling of the
//! eigen-projections, and the stability form Q_{H_R} on projected variations.

use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::SymmetricBand;
use crate::error::{Error, Result};
use crate::limit_stability::{assemble_stability, index_count, q_f, LimitingObject, StabilityAssembly, Variation};
use crate::poly;
use crate::riemann::forms::{EigenFormSystem, FormField};
use crate::riemann::mesh::MeshedSurface;
use crate::riemann::monodromy::Permutation;

pub type M2 = Matrix2<Complex64>;

/// Default grid size of the unit square.
pub const DEFAULT_GRID: usize = 129;
/// Residual bound of the matrix oracle.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Regularisation of the reference profile when q vanishes in the domain.
pub const REFERENCE_EPS: f64 = 0.25;
/// Supports and regions keep this distance from zeros of q.
pub const ZERO_STANDOFF: f64 = 0.05;
pub const MAX_NEWTON: usize = 60;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Higgs data on a planar grid.
#[derive(Clone, Debug)]
pub struct HiggsPair2 {
    pub surface: Arc<MeshedSurface>,
    /// Ascending polynomial coefficients of q.
    pub q_coeffs: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub dq: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
    /// ε of the reference profile ¼ log(|q|² + ε²).
    pub eps: f64,
    /// Boundary trace ½ log|q|.
    pub boundary: Vec<f64>,
    pub is_boundary: Vec<bool>,
}

impl HiggsPair2 {
    pub fn new(surface: Arc<MeshedSurface>, q_coeffs: Vec<Complex64>) -> Result<Self> {
        let (nx, ny) = surface
            .grid_shape
            .ok_or_else(|| Error::Domain("self-duality solves need a planar grid".into()))?;
        let mut coeffs = q_coeffs;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|z| z.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::Domain("q vanishes identically".into()));
        }
        let deriv: Vec<Complex64> = coeffs.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect();
        let zeros = if coeffs.len() > 1 { poly::roots(&coeffs) } else { Vec::new() };
        let q: Vec<Complex64> = surface.nodes.iter().map(|n| poly::eval(&coeffs, n.coord)).collect();
        let dq: Vec<Complex64> = surface.nodes.iter().map(|n| poly::eval(&deriv, n.coord)).collect();
        let is_boundary: Vec<bool> = (0..surface.len())
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                i == 0 || j == 0 || i == nx - 1 || j == ny - 1
            })
            .collect();
        let (x0, y0) = (surface.nodes[0].coord.re, surface.nodes[0].coord.im);
        let last = surface.nodes[surface.len() - 1].coord;
        let inside = |z: &Complex64| z.re > x0 && z.re < last.re && z.im > y0 && z.im < last.im;
        let on_closure = |z: &Complex64| z.re >= x0 && z.re <= last.re && z.im >= y0 && z.im <= last.im;
        let mut eps = 0.0;
        for z in &zeros {
            if on_closure(z) && !inside(z) {
                return Err(Error::Domain(format!("q vanishes on the boundary at {z}")));
            }
            if inside(z) {
                eps = REFERENCE_EPS;
            }
        }
        let mut boundary = vec![0.0; surface.len()];
        for k in 0..surface.len() {
            if is_boundary[k] {
                let m = q[k].norm();
                if m == 0.0 {
                    return Err(Error::Domain("q vanishes on the boundary".into()));
                }
                boundary[k] = 0.5 * m.ln();
            }
        }
        Ok(Self { surface, q_coeffs: coeffs, q, dq, zeros, eps, boundary, is_boundary })
    }

    /// Grid of n×n nodes on [−½, ½]².
    pub fn unit_square(n: usize, q_coeffs: Vec<Complex64>) -> Result<Self> {
        let s = MeshedSurface::planar_grid(-0.5, 0.5, -0.5, 0.5, n, n)?;
        Self::new(Arc::new(s), q_coeffs)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    fn ref_profile(&self, k: usize) -> f64 {
        0.25 * (self.q[k].norm_sqr() + self.eps * self.eps).ln()
    }

    /// Δ of the reference profile, exact.
    fn ref_laplacian(&self, k: usize) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        let d = self.q[k].norm_sqr() + self.eps * self.eps;
        self.eps * self.eps * self.dq[k].norm_sqr() / (d * d)
    }

    /// ∂ of the reference profile, exact.
    fn ref_dz(&self, k: usize) -> Complex64 {
        0.25 * self.q[k].conj() * self.dq[k] / (self.q[k].norm_sqr() + self.eps * self.eps)
    }

    /// Balanced profile ½ log|q| (infinite at zeros).
    pub fn balanced(&self, k: usize) -> f64 {
        0.5 * self.q[k].norm().ln()
    }

    pub fn distance_to_zeros(&self, k: usize) -> f64 {
        let z = self.surface.nodes[k].coord;
        self.zeros.iter().map(|r| (z - r).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Nodes of the annulus r0 ≤ |z| ≤ r1.
    pub fn annulus(&self, r0: f64, r1: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                let r = self.surface.nodes[k].coord.norm();
                r >= r0 && r <= r1
            })
            .collect()
    }

    /// Higgs field coefficient matrix at a node.
    pub fn phi(&self, k: usize) -> M2 {
        M2::new(c(0.0, 0.0), c(1.0, 0.0), self.q[k], c(0.0, 0.0))
    }

    /// Flat eigen-projections (π₁, π₂) for eigenvalues (√q, −√q), principal root.
    pub fn flat_projections(&self, k: usize) -> Result<(M2, M2)> {
        let s = self.q[k].sqrt();
        if s.norm() == 0.0 {
            return Err(Error::Domain(format!("q vanishes at node {k}")));
        }
        // Columns v± = (1, ±s); π± = v± ⊗ (dual row).
        let p1 = M2::new(c(0.5, 0.0), 0.5 / s, 0.5 * s, c(0.5, 0.0));
        let p2 = M2::new(c(0.5, 0.0), -0.5 / s, -0.5 * s, c(0.5, 0.0));
        Ok((p1, p2))
    }

    /// The limiting object with eigen-1-forms (√q, −√q) and κ = 4.
    pub fn limiting_object(&self) -> Result<LimitingObject> {
        let s: Vec<Complex64> = self.q.iter().map(|z| z.sqrt()).collect();
        let neg: Vec<Complex64> = s.iter().map(|z| -z).collect();
        let sys = EigenFormSystem::new(
            self.surface.clone(),
            vec![FormField::unchecked(s), FormField::unchecked(neg)],
            vec![1, 1],
            4.0,
            true,
        )?;
        let critical: Vec<usize> = self
            .zeros
            .iter()
            .filter_map(|z| {
                (0..self.len()).min_by(|&a, &b| {
                    (self.surface.nodes[a].coord - z).norm().total_cmp(&(self.surface.nodes[b].coord - z).norm())
                })
            })
            .filter(|&k| self.distance_to_zeros(k) <= self.surface.spacing)
            .collect();
        let swap = if self.zeros.is_empty() { Permutation::identity(2) } else { Permutation(vec![1, 0]) };
        let monodromy = vec![swap; self.surface.loops.len()];
        LimitingObject::new(sys, monodromy, None, critical)
    }
}

/// H = diag(e^u, e^{−u}) with u = reference profile + w.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicMetricField {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub r: f64,
    pub iterations: usize,
    /// Max-norm residual of the matrix equation.
    pub residual: f64,
    /// (iteration, damping, residual) per Newton step.
    pub trace: Vec<(usize, f64, f64)>,
}

impl HarmonicMetricField {
    pub fn metric(&self, k: usize) -> M2 {
        M2::new(c(self.u[k].exp(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c((-self.u[k]).exp(), 0.0))
    }

    fn metric_inv(&self, k: usize) -> M2 {
        M2::new(c((-self.u[k]).exp(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(self.u[k].exp(), 0.0))
    }

    /// ∂u: exact for the reference profile, finite differences for w.
    pub fn dz_u(&self, pair: &HiggsPair2, k: usize) -> Complex64 {
        pair.ref_dz(k) + pair.surface.dz_real_at(&self.w, k)
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried by the line search.
    pub min_damping: f64,
    /// Initial u; zero when absent.
    pub initial_u: Option<Vec<f64>>,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: MAX_NEWTON, min_damping: 1.0 / 1024.0, initial_u: None }
    }
}

fn interior_map(pair: &HiggsPair2) -> (Vec<usize>, Vec<Option<usize>>, usize) {
    let (nx, _) = pair.surface.grid_shape.expect("grid");
    let mut nodes = Vec::new();
    let mut slot = vec![None; pair.len()];
    for k in 0..pair.len() {
        if !pair.is_boundary[k] {
            slot[k] = Some(nodes.len());
            nodes.push(k);
        }
    }
    (nodes, slot, nx - 2)
}

/// 5-point Laplacian of a node field at an interior node.
fn laplacian(pair: &HiggsPair2, f: &[f64], k: usize) -> f64 {
    let (nx, _) = pair.surface.grid_shape.expect("grid");
    let h = pair.surface.nodes[1].coord.re - pair.surface.nodes[0].coord.re;
    let hy = pair.surface.nodes[nx].coord.im - pair.surface.nodes[0].coord.im;
    (f[k + 1] + f[k - 1] - 2.0 * f[k]) / (h * h) + (f[k + nx] + f[k - nx] - 2.0 * f[k]) / (hy * hy)
}

/// Scalar residual ¼Δu − R²(e^{2u} − |q|²e^{−2u}) at interior nodes.
fn scalar_residual(pair: &HiggsPair2, w: &[f64], u: &[f64], r: f64, k: usize) -> f64 {
    0.25 * (laplacian(pair, w, k) + pair.ref_laplacian(k))
        - r * r * ((2.0 * u[k]).exp() - pair.q[k].norm_sqr() * (-2.0 * u[k]).exp())
}

/// Max-norm residual of F_H + R²[Φ, Φ^{*H}] over interior nodes, with the
/// commutator assembled from explicit 2×2 products and the curvature
/// of the diagonal metric from ∂̄∂ log H.
pub fn matrix_residual(pair: &HiggsPair2, field: &HarmonicMetricField) -> f64 {
    let r = field.r;
    let mut worst: f64 = 0.0;
    for k in 0..pair.len() {
        if pair.is_boundary[k] {
            continue;
        }
        let h = field.metric(k);
        let hinv = field.metric_inv(k);
        let phi = pair.phi(k) * c(r, 0.0);
        let phi_star = hinv * phi.adjoint() * h;
        let commutator = phi * phi_star - phi_star * phi;
        // ∂̄∂ log H = ¼Δ diag(u, −u); F_H = −∂̄∂ log H dz∧dz̄.
        let lap = 0.25 * (laplacian(pair, &field.w, k) + pair.ref_laplacian(k));
        let curvature = M2::new(c(-lap, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(lap, 0.0));
        let total = curvature + commutator;
        worst = worst.max(total.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    worst
}

fn assemble_u(pair: &HiggsPair2, w: &[f64]) -> Vec<f64> {
    (0..pair.len()).map(|k| pair.ref_profile(k) + w[k]).collect()
}

fn newton_system(pair: &HiggsPair2, w: &[f64], r: f64) -> Result<(SymmetricBand, Vec<f64>, f64)> {
    let (nodes, slot, band) = interior_map(pair);
    let (nx, _) = pair.surface.grid_shape.expect("grid");
    let h = pair.surface.nodes[1].coord.re - pair.surface.nodes[0].coord.re;
    let hy = pair.surface.nodes[nx].coord.im - pair.surface.nodes[0].coord.im;
    let u = assemble_u(pair, w);
    let mut jac = SymmetricBand::zeros(nodes.len(), band);
    let mut rhs = vec![0.0; nodes.len()];
    let mut norm: f64 = 0.0;
    for (a, &k) in nodes.iter().enumerate() {
        let f = scalar_residual(pair, w, &u, r, k);
        norm = norm.max(f.abs());
        rhs[a] = f;
        // −J = −¼Δ_h + 2R²(e^{2u} + |q|²e^{−2u}).
        let diag = 0.25 * (2.0 / (h * h) + 2.0 / (hy * hy))
            + 2.0 * r * r * ((2.0 * u[k]).exp() + pair.q[k].norm_sqr() * (-2.0 * u[k]).exp());
        jac.add(a, a, diag);
        for (nb, hh) in [(k - 1, h), (k - nx, hy)] {
            if let Some(b) = slot[nb] {
                jac.add(a, b, -0.25 / (hh * hh));
            }
        }
    }
    Ok((jac, rhs, norm))
}

fn residual_norm(pair: &HiggsPair2, w: &[f64], r: f64) -> f64 {
    let u = assemble_u(pair, w);
    (0..pair.len())
        .filter(|&k| !pair.is_boundary[k])
        .map(|k| scalar_residual(pair, w, &u, r, k).abs())
        .fold(0.0, f64::max)
}

/// One damped Newton step from `field`.
pub fn newton_step(pair: &HiggsPair2, field: &HarmonicMetricField, min_damping: f64) -> Result<HarmonicMetricField> {
    let r = field.r;
    let (jac, rhs, norm) = newton_system(pair, &field.w, r)?;
    let delta = jac.cholesky()?.solve(&rhs);
    let (nodes, _, _) = interior_map(pair);
    let mut alpha = 1.0;
    loop {
        let mut w = field.w.clone();
        for (a, &k) in nodes.iter().enumerate() {
            w[k] += alpha * delta[a];
        }
        let new_norm = residual_norm(pair, &w, r);
        if new_norm < (1.0 - 1e-4 * alpha) * norm || alpha <= min_damping || norm == 0.0 {
            let mut out = HarmonicMetricField {
                u: assemble_u(pair, &w),
                w,
                r,
                iterations: field.iterations + 1,
                residual: 0.0,
                trace: field.trace.clone(),
            };
            out.residual = matrix_residual(pair, &out);
            out.trace.push((out.iterations, alpha, out.residual));
            return Ok(out);
        }
        alpha *= 0.5;
    }
}

pub fn solve_selfduality(pair: &HiggsPair2, r: f64, tol: f64) -> Result<HarmonicMetricField> {
    solve_with(pair, r, &SolverOptions::with_tol(tol))
}

pub fn solve_with(pair: &HiggsPair2, r: f64, opts: &SolverOptions) -> Result<HarmonicMetricField> {
    if !(r > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Domain("R and tol must be positive".into()));
    }
    let n = pair.len();
    let init_u = opts.initial_u.clone().unwrap_or_else(|| vec![0.0; n]);
    if init_u.len() != n {
        return Err(Error::Domain("initial guess has the wrong size".into()));
    }
    let mut w: Vec<f64> = (0..n).map(|k| init_u[k] - pair.ref_profile(k)).collect();
    for k in 0..n {
        if pair.is_boundary[k] {
            w[k] = pair.boundary[k] - pair.ref_profile(k);
        }
    }
    let mut field = HarmonicMetricField { u: assemble_u(pair, &w), w, r, iterations: 0, residual: 0.0, trace: Vec::new() };
    field.residual = matrix_residual(pair, &field);
    field.trace.push((0, 0.0, field.residual));
    let mut stalled = 0;
    while field.residual > opts.tol {
        if field.iterations >= opts.max_iter || stalled >= 5 {
            return Err(Error::NonConvergence {
                iterations: field.iterations,
                residual: field.residual,
                trace: field.trace,
            });
        }
        let prev = field.residual;
        field = newton_step(pair, &field, opts.min_damping)?;
        if field.residual >= 0.9 * prev {
            stalled += 1;
        } else {
            stalled = 0;
        }
    }
    Ok(field)
}

fn check_region(pair: &HiggsPair2, region: &[usize]) -> Result<()> {
    if region.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    for &k in region {
        if pair.distance_to_zeros(k) < ZERO_STANDOFF {
            return Err(Error::Domain(format!("region node {k} is within the standoff of a zero of q")));
        }
    }
    Ok(())
}

/// |A|²_H = 4 tr(A H⁻¹ A† H).
fn norm_sqr_h(a: &M2, h: &M2, hinv: &M2) -> f64 {
    4.0 * (a * hinv * a.adjoint() * h).trace().re
}

fn inner_h(a: &M2, b: &M2, h: &M2, hinv: &M2) -> Complex64 {
    4.0 * (a * hinv * b.adjoint() * h).trace()
}

fn adjoint_h(a: &M2, h: &M2, hinv: &M2) -> M2 {
    hinv * a.adjoint() * h
}

/// H-orthogonal projection onto the line spanned by v.
fn orthogonal_projection(v: nalgebra::Vector2<Complex64>, h: &M2) -> M2 {
    let hv = h * v;
    let denom = (v.adjoint() * hv)[(0, 0)];
    (v * hv.adjoint()) / denom
}

/// sup over `region` of |π_i − π'_i|_{H}, where π'_i is the H-orthogonal
/// projection onto the eigenline of π_i.
pub fn decoupling_error(field: &HarmonicMetricField, pair: &HiggsPair2, region: &[usize]) -> Result<f64> {
    check_region(pair, region)?;
    let mut worst: f64 = 0.0;
    for &k in region {
        let (p1, p2) = pair.flat_projections(k)?;
        let s = pair.q[k].sqrt();
        let h = field.metric(k);
        let hinv = field.metric_inv(k);
        for (p, v) in [(p1, nalgebra::Vector2::new(c(1.0, 0.0), s)), (p2, nalgebra::Vector2::new(c(1.0, 0.0), -s))] {
            let d = p - orthogonal_projection(v, &h);
            worst = worst.max(norm_sqr_h(&d, &h, &hinv).max(0.0).sqrt());
        }
    }
    Ok(worst)
}

/// sup over `region` of |u − ½ log|q||.
pub fn profile_gap(field: &HarmonicMetricField, pair: &HiggsPair2, region: &[usize]) -> f64 {
    region.iter().map(|&k| (field.u[k] - pair.balanced(k)).abs()).fold(0.0, f64::max)
}

/// A matrix per node.
pub type MatrixField = Vec<M2>;

fn zero_m2() -> M2 {
    M2::zeros()
}

/// Nodes where the variation or its stencil is nonzero.
fn footprint(pair: &HiggsPair2, x: &Variation) -> Vec<bool> {
    let mut mark = vec![false; pair.len()];
    for k in 0..pair.len() {
        if x.values.iter().any(|v| v[k] != 0.0) {
            mark[k] = true;
            for &(j, _) in &pair.surface.stencil[k] {
                mark[j] = true;
            }
        }
    }
    mark
}

/// Lift Σ X_i π_i of a variation to a matrix field.
pub fn lift_variation(x: &Variation, pair: &HiggsPair2) -> Result<MatrixField> {
    if x.m() != 2 {
        return Err(Error::Domain("rank-2 model needs two-component variations".into()));
    }
    let mark = footprint(pair, x);
    // Branch consistency of √q across every stencil edge touching the support.
    for k in 0..pair.len() {
        if !mark[k] {
            continue;
        }
        if pair.distance_to_zeros(k) < ZERO_STANDOFF {
            return Err(Error::Monodromy(format!("support reaches a zero of q at node {k}")));
        }
        for &(j, _) in &pair.surface.stencil[k] {
            if mark[j] {
                let (a, b) = (pair.q[k].sqrt(), pair.q[j].sqrt());
                if (a - b).norm() > (a + b).norm() {
                    return Err(Error::Monodromy(format!("support crosses the branch cut between nodes {k} and {j}")));
                }
            }
        }
    }
    let mut out = vec![zero_m2(); pair.len()];
    for k in 0..pair.len() {
        if !mark[k] {
            continue;
        }
        let (p1, p2) = pair.flat_projections(k)?;
        out[k] = p1 * c(x.values[0][k], 0.0) + p2 * c(x.values[1][k], 0.0);
    }
    Ok(out)
}

/// X_R = (X + X^{*H})/2 of the lifted variation.
pub fn project_variation(x: &Variation, field: &HarmonicMetricField, pair: &HiggsPair2) -> Result<MatrixField> {
    let lift = lift_variation(x, pair)?;
    Ok(self_adjoint_part(&lift, field))
}

/// (X + X^{*H})/2 per node.
pub fn self_adjoint_part(x: &MatrixField, field: &HarmonicMetricField) -> MatrixField {
    x.iter()
        .enumerate()
        .map(|(k, l)| {
            let h = field.metric(k);
            let hinv = field.metric_inv(k);
            (l + adjoint_h(l, &h, &hinv)) * c(0.5, 0.0)
        })
        .collect()
}

/// max over nodes of |X − X^{*H}|.
pub fn self_adjointness_residual(xr: &MatrixField, field: &HarmonicMetricField) -> f64 {
    xr.iter()
        .enumerate()
        .map(|(k, x)| {
            let h = field.metric(k);
            let hinv = field.metric_inv(k);
            (x - adjoint_h(x, &h, &hinv)).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn matrix_dz(pair: &HiggsPair2, x: &MatrixField, k: usize) -> M2 {
    let s = &pair.surface;
    let x0 = x[k];
    let mut acc = zero_m2();
    for &(j, w) in &s.derivative[k].dz {
        acc += (x[j] - x0) * w;
    }
    acc
}

/// ∂_H X = ∂X + [H⁻¹∂H, X].
fn covariant_dz(pair: &HiggsPair2, field: &HarmonicMetricField, x: &MatrixField, k: usize) -> M2 {
    let du = field.dz_u(pair, k);
    let a = M2::new(du, c(0.0, 0.0), c(0.0, 0.0), -du);
    matrix_dz(pair, x, k) + a * x[k] - x[k] * a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QhrTerms {
    pub total: f64,
    pub kinetic: f64,
    /// The −2|⟨∂X, Φ⟩|²/|Φ|² part.
    pub projection: f64,
    /// The R²|[X, Φ]|² part.
    pub commutator: f64,
}

fn touches(x: &MatrixField, pair: &HiggsPair2, k: usize) -> bool {
    let nz = |m: &M2| m.iter().any(|z| z.norm_sqr() != 0.0);
    nz(&x[k]) || pair.surface.stencil[k].iter().any(|&(j, _)| nz(&x[j]))
}

/// Q_{H_R}(X) = 4∫ |∂_H X|² − 2|⟨∂_H X, Φ⟩|²/|Φ|² + R²|[X, Φ]|², norms 4 tr(· H⁻¹ ·† H).
pub fn q_hr(field: &HarmonicMetricField, pair: &HiggsPair2, r: f64, xr: &MatrixField) -> Result<QhrTerms> {
    q_hr_bilinear(field, pair, r, xr, xr)
}

/// Polarized form of `q_hr`.
pub fn q_hr_bilinear(
    field: &HarmonicMetricField,
    pair: &HiggsPair2,
    r: f64,
    x: &MatrixField,
    y: &MatrixField,
) -> Result<QhrTerms> {
    let mut t = QhrTerms { total: 0.0, kinetic: 0.0, projection: 0.0, commutator: 0.0 };
    for k in 0..pair.len() {
        if !(touches(x, pair, k) && touches(y, pair, k)) {
            continue;
        }
        let h = field.metric(k);
        let hinv = field.metric_inv(k);
        let phi = pair.phi(k);
        let phi_norm = norm_sqr_h(&phi, &h, &hinv);
        if phi_norm <= 1e-14 {
            return Err(Error::SingularDenominator { node: k, value: phi_norm });
        }
        let (dx, dy) = (covariant_dz(pair, field, x, k), covariant_dz(pair, field, y, k));
        let w = pair.surface.weights[k];
        t.kinetic += w * inner_h(&dx, &dy, &h, &hinv).re;
        let (px, py) = (inner_h(&dx, &phi, &h, &hinv), inner_h(&dy, &phi, &h, &hinv));
        t.projection -= w * 2.0 * (px * py.conj()).re / phi_norm;
        let (cx, cy) = (x[k] * phi - phi * x[k], y[k] * phi - phi * y[k]);
        t.commutator += w * r * r * inner_h(&cx, &cy, &h, &hinv).re;
    }
    t.kinetic *= 4.0;
    t.projection *= 4.0;
    t.commutator *= 4.0;
    t.total = t.kinetic + t.projection + t.commutator;
    Ok(t)
}

/// Gaps between the R-dependent and the limiting objects on the support of X.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingGaps {
    /// sup |X^{*_R} − X^†|.
    pub adjoint: f64,
    /// sup |∂_R X_R − ∂X|.
    pub derivative: f64,
    /// sup ||X_R|_R − |X||.
    pub norm: f64,
}

/// The balanced metric diag(|q|^{½}, |q|^{−½}) as a field, for comparison.
pub fn balanced_field(pair: &HiggsPair2, r: f64) -> HarmonicMetricField {
    let u: Vec<f64> = (0..pair.len())
        .map(|k| if pair.distance_to_zeros(k) > 0.0 { pair.balanced(k) } else { 0.0 })
        .collect();
    let w = (0..pair.len()).map(|k| u[k] - pair.ref_profile(k)).collect();
    HarmonicMetricField { u, w, r, iterations: 0, residual: f64::NAN, trace: Vec::new() }
}

pub fn decoupling_gaps(field: &HarmonicMetricField, pair: &HiggsPair2, x: &Variation) -> Result<DecouplingGaps> {
    let lift = lift_variation(x, pair)?;
    let limit = balanced_field(pair, field.r);
    let xr = project_variation(x, field, pair)?;
    let support: Vec<usize> = (0..pair.len()).filter(|&k| x.values.iter().any(|v| v[k] != 0.0)).collect();
    let mut g = DecouplingGaps { adjoint: 0.0, derivative: 0.0, norm: 0.0 };
    for &k in &support {
        let (h, hinv) = (field.metric(k), field.metric_inv(k));
        let (h0, h0inv) = (limit.metric(k), limit.metric_inv(k));
        let sup = |m: &M2| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        g.adjoint = g.adjoint.max(sup(&(adjoint_h(&lift[k], &h, &hinv) - adjoint_h(&lift[k], &h0, &h0inv))));
        let d = covariant_dz(pair, field, &xr, k) - covariant_dz(pair, &limit, &lift, k);
        g.derivative = g.derivative.max(sup(&d));
        let n_r = norm_sqr_h(&xr[k], &h, &hinv).max(0.0).sqrt();
        let n_0 = norm_sqr_h(&lift[k], &h0, &h0inv).max(0.0).sqrt();
        g.norm = g.norm.max((n_r - n_0).abs());
    }
    Ok(g)
}

/// Least-squares slope and correlation of (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let corr = if syy == 0.0 { 1.0 } else { sxy / (sxx * syy).sqrt() };
    (slope, my - slope * mx, corr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: f64,
    pub q_hr: f64,
    pub q_f: f64,
    pub diff: f64,
    pub slope_so_far: f64,
    pub commutator_term: f64,
    pub decoupling_error: f64,
    pub solver_residual: f64,
    pub index_hr: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted slope of log|q_hr − q_f| against R; None when flagged exact.
    pub slope: Option<f64>,
    pub exact: bool,
    pub index_qf: usize,
    pub liminf_holds: bool,
}

/// Pencil of Q_{H_R} over the projections of a basis, with the H_R Gram matrix.
pub fn assemble_q_hr(
    field: &HarmonicMetricField,
    pair: &HiggsPair2,
    basis: &[Variation],
) -> Result<StabilityAssembly> {
    let proj: Vec<MatrixField> = basis.iter().map(|x| project_variation(x, field, pair)).collect::<Result<_>>()?;
    let d = proj.len();
    let mut a = nalgebra::DMatrix::zeros(d, d);
    let mut b = nalgebra::DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            a[(i, j)] = q_hr_bilinear(field, pair, field.r, &proj[i], &proj[j])?.total;
            a[(j, i)] = a[(i, j)];
            let mut g = 0.0;
            for k in 0..pair.len() {
                let (h, hinv) = (field.metric(k), field.metric_inv(k));
                g += pair.surface.weights[k] * inner_h(&proj[i][k], &proj[j][k], &h, &hinv).re;
            }
            b[(i, j)] = g;
            b[(j, i)] = g;
        }
    }
    Ok(StabilityAssembly { basis_descriptor: format!("projected basis of {d} variations"), a, b })
}

/// Sweep over R: solve, project, evaluate Q_{H_R} and compare with Q_f.
pub fn convergence_study(
    pair: &HiggsPair2,
    x: &Variation,
    basis: &[Variation],
    r_list: &[f64],
    tol: f64,
    region: &[usize],
) -> Result<ConvergenceReport> {
    if r_list.len() < 3 || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("R list must be increasing with at least 3 entries".into()));
    }
    let obj = pair.limiting_object()?;
    let qf = q_f(&obj, x)?;
    let index_qf = if basis.is_empty() {
        0
    } else {
        index_count(&assemble_stability(&obj, basis, "rank-2 limit basis")?)?.index
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut guess: Option<Vec<f64>> = None;
    for &r in r_list {
        let mut opts = SolverOptions::with_tol(tol);
        opts.initial_u = guess.clone();
        let field = solve_with(pair, r, &opts)?;
        guess = Some(field.u.clone());
        let xr = project_variation(x, &field, pair)?;
        let terms = q_hr(&field, pair, r, &xr)?;
        let diff = (terms.total - qf).abs();
        let index_hr = if basis.is_empty() { 0 } else { index_count(&assemble_q_hr(&field, pair, basis)?)?.index };
        let decoupling = if region.is_empty() { f64::NAN } else { decoupling_error(&field, pair, region)? };
        let mut row = ConvergenceRow {
            r,
            q_hr: terms.total,
            q_f: qf,
            diff,
            slope_so_far: f64::NAN,
            commutator_term: terms.commutator,
            decoupling_error: decoupling,
            solver_residual: field.residual,
            index_hr,
        };
        let prior: Vec<&ConvergenceRow> = rows.iter().chain(std::iter::once(&row)).collect();
        if prior.len() >= 2 && prior.iter().all(|p| p.diff > 0.0) {
            let xs: Vec<f64> = prior.iter().map(|p| p.r).collect();
            let ys: Vec<f64> = prior.iter().map(|p| p.diff.ln()).collect();
            row.slope_so_far = linear_fit(&xs, &ys).0;
        }
        rows.push(row);
    }
    let scale = qf.abs().max(1e-300);
    let exact = rows.iter().all(|r| r.diff <= 1e-9 * scale.max(1.0));
    let slope = if exact { None } else { Some(rows.last().map(|r| r.slope_so_far).unwrap_or(f64::NAN)) };
    let liminf_holds = rows.last().map_or(false, |r| r.index_hr >= index_qf);
    Ok(ConvergenceReport { rows, slope, exact, index_qf, liminf_holds })
}

/// Serializable solver configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_n: usize,
    /// Ascending coefficients of q as [re, im] pairs.
    pub q_spec: Vec<Complex64>,
    #[serde(rename = "R")]
    pub r: f64,
    pub tol: f64,
    /// Smallest line-search damping factor.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { grid_n: DEFAULT_GRID, q_spec: vec![c(0.0, 0.0), c(1.0, 0.0)], r: 1.0, tol: DEFAULT_TOL, damping: 1.0 / 1024.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 5 {
            return Err(Error::Config("grid_n must be at least 5".into()));
        }
        if !(self.r > 0.0 && self.tol > 0.0 && self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config("R, tol and damping must be positive, damping at most 1".into()));
        }
        if (self.grid_n as f64) < 16.0 * self.r {
            return Err(Error::Config(format!("grid_n = {} is below the stability limit 16·R", self.grid_n)));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<(HiggsPair2, HarmonicMetricField)> {
        self.validate()?;
        let pair = HiggsPair2::unit_square(self.grid_n, self.q_spec.clone())?;
        let mut opts = SolverOptions::with_tol(self.tol);
        opts.min_damping = self.damping;
        let field = solve_with(&pair, self.r, &opts)?;
        Ok((pair, field))
    }
}

/// Parses "1", "z", "z+2", "z-0.5" or a comma list of ascending real coefficients.
pub fn parse_q_spec(spec: &str) -> Result<Vec<Complex64>> {
    let t: String = spec.chars().filter(|ch| !ch.is_whitespace()).collect();
    if let Some(rest) = t.strip_prefix('z') {
        let shift = if rest.is_empty() {
            0.0
        } else {
            rest.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse q spec {spec:?}")))?
        };
        return Ok(vec![c(shift, 0.0), c(1.0, 0.0)]);
    }
    t.split(',')
        .map(|p| p.parse::<f64>().map(|v| c(v, 0.0)).map_err(|_| Error::Config(format!("cannot parse q spec {spec:?}"))))
        .collect()
}

/// CSV grid of the solution: x, y, u.
pub fn field_csv(pair: &HiggsPair2, field: &HarmonicMetricField) -> String {
    let mut out = String::from("x,y,u\n");
    for (n, u) in pair.surface.nodes.iter().zip(&field.u) {
        out += &format!("{},{},{}\n", crate::report::fmt(n.coord.re), crate::report::fmt(n.coord.im), crate::report::fmt(*u));
    }
    out
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        use crate::report::fmt;
        let mut out = String::from("R,q_hr,q_f,diff,slope_so_far,commutator_term,decoupling_error\n");
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                fmt(r.r),
                fmt(r.q_hr),
                fmt(r.q_f),
                fmt(r.diff),
                fmt(r.slope_so_far),
                fmt(r.commutator_term),
                fmt(r.decoupling_error)
            );
        }
        out
    }
}

/// Smooth bump variation (x, −x) about a point, radius `radius`.
pub fn bump_variation(pair: &HiggsPair2, center: Complex64, radius: f64) -> Variation {
    let x: Vec<f64> = pair
        .surface
        .nodes
        .iter()
        .map(|n| {
            let rho = (n.coord - center).norm() / radius;
            if rho < 1.0 {
                (1.0 - 1.0 / (1.0 - rho * rho)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let neg = x.iter().map(|v| -v).collect();
    Variation::from_components(vec![x, neg])
}
