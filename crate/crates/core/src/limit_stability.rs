//! Stability form of a limiting object, its discretization over a variation
//! basis, and the Morse index of the resulting matrix pencil.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riemann::forms::{density_from, EigenFormSystem, PeriodLattice};
use crate::riemann::mesh::{Chart, MeshedSurface, SurfaceKind};
use crate::riemann::monodromy::Permutation;

/// Nodes with |φ|² below this fraction of the maximum may not meet a support.
pub const DENOMINATOR_GUARD: f64 = 1e-14;
/// Relative threshold for counting a pencil eigenvalue as negative.
pub const INDEX_TOL: f64 = 1e-8;
/// Traceless variations satisfy |Σ r_i X_i| below this.
pub const VARIATION_TRACE_TOL: f64 = 1e-10;
/// Default step of the finite-difference second variation.
pub const DEFAULT_FD_STEP: f64 = 1e-2;

/// A limiting object: the eigen-1-forms of ∂f together with the flat
/// structure of the bundle they live in.
#[derive(Clone, Debug)]
pub struct LimitingObject {
    pub system: EigenFormSystem,
    /// One permutation per surface loop.
    pub monodromy: Vec<Permutation>,
    pub periods: Option<PeriodLattice>,
    pub critical_nodes: Vec<usize>,
}

impl LimitingObject {
    pub fn new(
        system: EigenFormSystem,
        monodromy: Vec<Permutation>,
        periods: Option<PeriodLattice>,
        critical_nodes: Vec<usize>,
    ) -> Result<Self> {
        let m = system.m();
        for p in &monodromy {
            if p.0.len() != m {
                return Err(Error::Domain("monodromy permutation of wrong size".into()));
            }
            if p.0.iter().enumerate().any(|(i, &j)| system.r[i] != system.r[j]) {
                return Err(Error::Consistency("monodromy mixes unequal multiplicities".into()));
            }
        }
        Ok(Self { system, monodromy, periods, critical_nodes })
    }

    /// Object with trivial monodromy and no critical points.
    pub fn untwisted(system: EigenFormSystem) -> Self {
        let loops = system.surface.loops.len();
        let m = system.m();
        Self { system, monodromy: vec![Permutation::identity(m); loops], periods: None, critical_nodes: Vec::new() }
    }

    pub fn surface(&self) -> &MeshedSurface {
        &self.system.surface
    }
}

/// A real m-vector per node, in the flat trivialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    /// `values[i][node]` is component i.
    pub values: Vec<Vec<f64>>,
    pub support: Vec<bool>,
}

impl Variation {
    /// Support is taken to be the set of nodes where some component is nonzero.
    pub fn from_components(values: Vec<Vec<f64>>) -> Self {
        let n = values.first().map_or(0, |v| v.len());
        let support = (0..n).map(|k| values.iter().any(|v| v[k] != 0.0)).collect();
        Self { values, support }
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Self { values: vec![vec![0.0; n]; m], support: vec![false; n] }
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v.iter().map(|x| x * c).collect()).collect(),
            support: self.support.clone(),
        }
    }

    /// Σ_k c_k X_k over variations of the same shape.
    pub fn combination(basis: &[Variation], coeffs: &[f64]) -> Self {
        let m = basis[0].m();
        let n = basis[0].values[0].len();
        let mut values = vec![vec![0.0; n]; m];
        for (b, &ck) in basis.iter().zip(coeffs) {
            for (vi, bi) in values.iter_mut().zip(&b.values) {
                for (x, y) in vi.iter_mut().zip(bi) {
                    *x += ck * y;
                }
            }
        }
        Self::from_components(values)
    }

    /// Checks shape, tracelessness and avoidance of critical nodes.
    pub fn validate(&self, obj: &LimitingObject) -> Result<()> {
        let sys = &obj.system;
        if self.m() != sys.m() || self.values.iter().any(|v| v.len() != sys.surface.len()) {
            return Err(Error::Domain("variation does not match the object".into()));
        }
        if sys.traceless {
            for k in 0..sys.surface.len() {
                let s: f64 = self.values.iter().zip(&sys.r).map(|(v, &r)| r as f64 * v[k]).sum();
                if s.abs() > VARIATION_TRACE_TOL {
                    return Err(Error::Domain(format!("variation not traceless at node {k}")));
                }
            }
        }
        for &c in &obj.critical_nodes {
            if self.values.iter().any(|v| v[c] != 0.0) {
                return Err(Error::Domain(format!("variation does not vanish at critical node {c}")));
            }
        }
        Ok(())
    }
}

/// Chart derivatives ∂X_i, node-major.
struct Derived {
    dz: Vec<Complex64>,
    m: usize,
}

impl Derived {
    fn new(surface: &MeshedSurface, x: &Variation) -> Self {
        let m = x.m();
        let n = surface.len();
        let mut dz = vec![Complex64::new(0.0, 0.0); n * m];
        for (i, comp) in x.values.iter().enumerate() {
            if comp.iter().all(|&v| v == 0.0) {
                continue;
            }
            for node in 0..n {
                dz[node * m + i] = surface.dz_real_at(comp, node);
            }
        }
        Self { dz, m }
    }

    fn at(&self, node: usize) -> &[Complex64] {
        &self.dz[node * self.m..(node + 1) * self.m]
    }

    fn touches(&self, node: usize) -> bool {
        self.at(node).iter().any(|z| z.norm_sqr() != 0.0)
    }
}

/// Per-node data of the system reused across basis pairs.
struct Frame {
    energy: Vec<f64>,
    guard: f64,
}

impl Frame {
    fn new(sys: &EigenFormSystem) -> Self {
        let energy: Vec<f64> = (0..sys.surface.len()).map(|k| sys.energy_at(k)).collect();
        let top = energy.iter().cloned().fold(0.0, f64::max);
        Self { energy, guard: DENOMINATOR_GUARD * top }
    }
}

fn check_denominator(frame: &Frame, d: &Derived, node: usize) -> Result<()> {
    if frame.energy[node] <= frame.guard && d.touches(node) {
        return Err(Error::SingularDenominator { node, value: frame.energy[node] });
    }
    Ok(())
}

/// Σ r_i ∂X_i φ_i at a node.
fn pairing(sys: &EigenFormSystem, dz: &[Complex64], node: usize) -> Complex64 {
    dz.iter()
        .zip(&sys.forms)
        .zip(&sys.r)
        .map(|((d, f), &r)| r as f64 * d * f.values[node])
        .sum()
}

/// Q_f(X) = 4κ ∫ Σ r_i|∂X_i|² − 2|Σ r_i ∂X_i φ_i|² / Σ r_i|φ_i|², by node
/// quadrature in each node's chart.
pub fn q_f(obj: &LimitingObject, x: &Variation) -> Result<f64> {
    let sys = &obj.system;
    let d = Derived::new(&sys.surface, x);
    let frame = Frame::new(sys);
    let mut total = 0.0;
    for node in 0..sys.surface.len() {
        if !d.touches(node) {
            continue;
        }
        check_denominator(&frame, &d, node)?;
        let dz = d.at(node);
        let kin: f64 = dz.iter().zip(&sys.r).map(|(z, &r)| r as f64 * z.norm_sqr()).sum();
        let p = pairing(sys, dz, node);
        total += sys.surface.weights[node] * (kin - 2.0 * p.norm_sqr() / frame.energy[node]);
    }
    Ok(4.0 * sys.kappa * total)
}

/// κ ∫ Σ r_i X_i Y_i.
pub fn l2_inner(obj: &LimitingObject, x: &Variation, y: &Variation) -> f64 {
    let sys = &obj.system;
    let mut total = 0.0;
    for node in 0..sys.surface.len() {
        let mut s = 0.0;
        for ((xi, yi), &r) in x.values.iter().zip(&y.values).zip(&sys.r) {
            s += r as f64 * xi[node] * yi[node];
        }
        total += sys.surface.weights[node] * s;
    }
    sys.kappa * total
}

#[derive(Clone, Debug)]
pub struct StabilityAssembly {
    pub basis_descriptor: String,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Stiffness and Gram matrices of Q_f over a basis.
pub fn assemble_stability(obj: &LimitingObject, basis: &[Variation], descriptor: &str) -> Result<StabilityAssembly> {
    if basis.is_empty() {
        return Err(Error::Basis("empty basis".into()));
    }
    for x in basis {
        x.validate(obj)?;
    }
    let sys = &obj.system;
    let surface = &sys.surface;
    let frame = Frame::new(sys);
    let derived: Vec<Derived> = basis.iter().map(|x| Derived::new(surface, x)).collect();
    let dim = basis.len();
    let n = surface.len();
    for d in &derived {
        for node in 0..n {
            check_denominator(&frame, d, node)?;
        }
    }
    // Pairings per basis element and node.
    let pair: Vec<Vec<Complex64>> = derived
        .iter()
        .map(|d| (0..n).map(|node| pairing(sys, d.at(node), node)).collect())
        .collect();
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut qa = 0.0;
            for node in 0..n {
                let (di, dj) = (derived[i].at(node), derived[j].at(node));
                let mut kin = 0.0;
                for ((u, v), &r) in di.iter().zip(dj).zip(&sys.r) {
                    kin += r as f64 * (u * v.conj()).re;
                }
                if kin == 0.0 && pair[i][node].norm_sqr() == 0.0 {
                    continue;
                }
                let cross = (pair[i][node] * pair[j][node].conj()).re;
                let e = frame.energy[node];
                let term = if e > 0.0 { kin - 2.0 * cross / e } else { kin };
                qa += surface.weights[node] * term;
            }
            a[(i, j)] = 4.0 * sys.kappa * qa;
            a[(j, i)] = a[(i, j)];
            b[(i, j)] = l2_inner(obj, &basis[i], &basis[j]);
            b[(j, i)] = b[(i, j)];
        }
    }
    let asm = StabilityAssembly { basis_descriptor: descriptor.to_string(), a, b };
    asm.b_cholesky()?;
    Ok(asm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub dim: usize,
    pub index: usize,
    /// Smallest eigenvalue of the pencil.
    pub min_eig: f64,
    pub eigenvalues: Vec<f64>,
}

impl StabilityAssembly {
    fn b_cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let chol = self.b.clone().cholesky().ok_or_else(|| Error::Basis("Gram matrix not positive definite".into()))?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x.abs()), hi.max(x.abs())));
        if lo <= 1e-7 * hi {
            return Err(Error::Basis(format!("basis numerically dependent (pivot ratio {:.3e})", lo / hi)));
        }
        Ok(chol)
    }

    /// Eigenvalues of the pencil (A, B), ascending.
    pub fn pencil_eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = self.b_cholesky()?;
        let l = chol.l();
        let linv = l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
            .ok_or_else(|| Error::Basis("singular Cholesky factor".into()))?;
        let c = &linv * &self.a * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(c, 1e-15, 10_000).ok_or_else(|| Error::Numerical {
            message: "symmetric eigensolver did not converge".into(),
            diagnostics: vec![format!("dimension {}", self.a.nrows()), "max iterations 10000".into()],
        })?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
        };
        serde_json::json!({
            "basis_descriptor": self.basis_descriptor,
            "A": rows(&self.a),
            "B": rows(&self.b),
        })
    }
}

/// Number of pencil eigenvalues below −INDEX_TOL·max|eigenvalue|.
pub fn index_count(asm: &StabilityAssembly) -> Result<IndexReport> {
    let ev = asm.pencil_eigenvalues()?;
    let scale = ev.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tau = INDEX_TOL * scale;
    Ok(IndexReport {
        dim: ev.len(),
        index: ev.iter().filter(|&&x| x < -tau).count(),
        min_eig: ev.first().copied().unwrap_or(0.0),
        eigenvalues: ev,
    })
}

/// Distance between two nodes in a shared chart; infinite when the nodes
/// sit in different charts or sheets.
pub fn chart_distance(surface: &MeshedSurface, a: usize, b: usize) -> f64 {
    let (na, nb) = (&surface.nodes[a], &surface.nodes[b]);
    if na.chart != nb.chart || na.sheet != nb.sheet {
        return f64::INFINITY;
    }
    let d = nb.coord - na.coord;
    match (surface.kind, na.chart) {
        (SurfaceKind::FlatTorus, _) => {
            let wrap = |x: f64| x - x.round();
            (wrap(d.re).powi(2) + wrap(d.im).powi(2)).sqrt()
        }
        (_, Chart::Log) => {
            let t = (d.im + PI).rem_euclid(2.0 * PI) - PI;
            (d.re * d.re + t * t).sqrt()
        }
        _ => d.norm(),
    }
}

/// Two-radius logarithmic cutoff: 0 within δ², log(d/δ²)/log(1/δ) between
/// δ² and δ, and 1 beyond δ.
pub fn log_cutoff_profile(d: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if d < d2 {
        0.0
    } else if d > delta {
        1.0
    } else {
        (d / d2).ln() / (1.0 / delta).ln()
    }
}

pub fn log_cutoff(surface: &MeshedSurface, x: &Variation, punctures: &[usize], delta: f64) -> Result<Variation> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("cutoff radius {delta} outside (0, 1)")));
    }
    let n = surface.len();
    let eta: Vec<f64> = (0..n)
        .map(|k| {
            punctures
                .iter()
                .map(|&p| log_cutoff_profile(chart_distance(surface, p, k), delta))
                .fold(1.0, f64::min)
        })
        .collect();
    let values = x.values.iter().map(|v| v.iter().zip(&eta).map(|(a, e)| a * e).collect()).collect();
    let support = x.support.iter().zip(&eta).map(|(&s, &e)| s && e > 0.0).collect();
    Ok(Variation { values, support })
}

/// Central second difference (A(t) − 2A(0) + A(−t))/t² of total area with
/// ∂f shifted to ∂f + t∂X.
pub fn fd_second_variation(obj: &LimitingObject, x: &Variation, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("step {t} must be positive")));
    }
    let sys = &obj.system;
    let d = Derived::new(&sys.surface, x);
    let mut total = 0.0;
    for node in 0..sys.surface.len() {
        if !d.touches(node) {
            continue;
        }
        let dz = d.at(node);
        let density = |s: f64| -> Result<f64> {
            let mut e = 0.0;
            let mut h = Complex64::new(0.0, 0.0);
            for ((f, dx), &r) in sys.forms.iter().zip(dz).zip(&sys.r) {
                let v = f.values[node] + s * dx;
                e += r as f64 * v.norm_sqr();
                h += r as f64 * v * v;
            }
            density_from(sys.kappa, e, h, node)
        };
        let second = density(t)? + density(-t)? - 2.0 * density(0.0)?;
        total += sys.surface.weights[node] * second;
    }
    Ok(total / (t * t))
}

/// Orthonormal basis (in the κ Σ r_i x_i y_i metric) of the directions
/// allowed by the system: the trace-zero hyperplane if traceless, else ℝ^m.
pub fn fiber_basis(sys: &EigenFormSystem) -> Vec<Vec<f64>> {
    let m = sys.m();
    let w: Vec<f64> = sys.r.iter().map(|&r| r as f64 * sys.kappa).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let constraint: Vec<f64> = sys.r.iter().map(|&r| r as f64).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&w).map(|((x, y), wi)| x * y * wi).sum() };
    for k in 0..m {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        if sys.traceless {
            // Project out the normal to Σ r_i x_i = 0, which is (1, …, 1) in this metric.
            let ones = vec![1.0; m];
            let c = constraint.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / constraint.iter().sum::<f64>();
            for (x, o) in v.iter_mut().zip(&ones) {
                *x -= c * o;
            }
        }
        for b in &out {
            let p = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-10 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Real Fourier modes on the unit torus ordered by frequency, then the
/// fiber directions; the first `count` products are returned.
pub fn fourier_basis(sys: &EigenFormSystem, count: usize) -> Vec<Variation> {
    let surface = &sys.surface;
    let dirs = fiber_basis(sys);
    let mut modes: Vec<(i64, i64)> = Vec::new();
    let bound = 8i64;
    for k in -bound..=bound {
        for l in -bound..=bound {
            if (k, l) == (0, 0) || k > 0 || (k == 0 && l > 0) {
                modes.push((k, l));
            }
        }
    }
    modes.sort_by_key(|&(k, l)| (k * k + l * l, k, l));
    let mut scalars: Vec<Vec<f64>> = Vec::new();
    for &(k, l) in &modes {
        let phase = |n: &crate::riemann::Node| 2.0 * PI * (k as f64 * n.coord.re + l as f64 * n.coord.im);
        scalars.push(surface.nodes.iter().map(|n| phase(n).cos()).collect());
        if (k, l) != (0, 0) {
            scalars.push(surface.nodes.iter().map(|n| phase(n).sin()).collect());
        }
    }
    let mut out = Vec::with_capacity(count);
    'outer: for s in &scalars {
        for d in &dirs {
            if out.len() == count {
                break 'outer;
            }
            out.push(Variation::from_components(d.iter().map(|&c| s.iter().map(|x| c * x).collect()).collect()));
        }
    }
    out
}

/// Smooth bump exp(1 − 1/(1 − ρ²)) of chart radius `radius` about `center`.
pub fn bump(surface: &MeshedSurface, center: usize, radius: f64) -> Vec<f64> {
    (0..surface.len())
        .map(|k| {
            let rho = chart_distance(surface, center, k) / radius;
            if rho < 1.0 {
                (1.0 - 1.0 / (1.0 - rho * rho)).exp()
            } else {
                0.0
            }
        })
        .collect()
}

/// A scalar function times a fixed fiber vector.
pub fn scalar_times(values: &[f64], direction: &[f64]) -> Variation {
    Variation::from_components(direction.iter().map(|&c| values.iter().map(|x| c * x).collect()).collect())
}

/// Unit normal field as a variation of an ℝ³-valued system.
pub fn normal_variation(normals: &[[f64; 3]]) -> Variation {
    let values = (0..3).map(|i| normals.iter().map(|n| n[i]).collect()).collect();
    Variation::from_components(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::forms::FormField;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flat(n: usize, vals: &[Complex64], kappa: f64, traceless: bool) -> LimitingObject {
        let s = Arc::new(MeshedSurface::flat_torus(n).unwrap());
        let forms = vals.iter().map(|&v| FormField::holomorphic(vec![v; s.len()])).collect();
        let sys = EigenFormSystem::new(s, forms, vec![1; vals.len()], kappa, traceless).unwrap();
        LimitingObject::untwisted(sys)
    }

    #[test]
    fn constant_variation_costs_nothing() {
        let obj = flat(8, &[c(1.0, 0.0), c(0.0, 1.0)], 1.0, false);
        let x = Variation::from_components(vec![vec![0.3; 64], vec![-1.0; 64]]);
        assert_eq!(q_f(&obj, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_element_assembly() {
        let obj = flat(12, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], 8.0, true);
        let basis = fourier_basis(&obj.system, 7);
        let x = basis[6].clone();
        let asm = assemble_stability(&obj, &[x.clone()], "one").unwrap();
        let q = q_f(&obj, &x).unwrap();
        assert!((asm.a[(0, 0)] - q).abs() <= 1e-12 * q.abs().max(1.0));
    }

    #[test]
    fn constant_orthonormal_basis_gram() {
        let obj = flat(6, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], 8.0, true);
        let basis = fourier_basis(&obj.system, 3);
        let asm = assemble_stability(&obj, &basis, "constants").unwrap();
        assert!((asm.b.clone() - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn index_examples() {
        let asm = StabilityAssembly {
            basis_descriptor: "diag".into(),
            a: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 2.0])),
            b: DMatrix::identity(2, 2),
        };
        assert_eq!(index_count(&asm).unwrap().index, 1);
        let asm = StabilityAssembly { a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), ..asm };
        assert_eq!(index_count(&asm).unwrap().index, 0);
    }

    #[test]
    fn dependent_basis_rejected() {
        let obj = flat(6, &[c(1.0, 0.0), c(0.0, 1.0)], 1.0, false);
        let basis = fourier_basis(&obj.system, 2);
        let dup = vec![basis[0].clone(), basis[0].scaled(2.0)];
        assert!(matches!(assemble_stability(&obj, &dup, "dup"), Err(Error::Basis(_))));
    }

    #[test]
    fn cutoff_profile_shape() {
        assert_eq!(log_cutoff_profile(0.001, 0.1), 0.0);
        assert_eq!(log_cutoff_profile(0.5, 0.1), 1.0);
        assert!((log_cutoff_profile(0.1, 0.1) - 1.0).abs() < 1e-14);
        assert!((log_cutoff_profile(0.01, 0.1)).abs() < 1e-14);
        let s = MeshedSurface::flat_torus(4).unwrap();
        let x = Variation::zero(1, s.len());
        assert!(log_cutoff(&s, &x, &[0], 1.5).is_err());
    }

    #[test]
    fn cutoff_far_from_support_is_identity() {
        let s = MeshedSurface::flat_torus(32).unwrap();
        let b = bump(&s, s.grid_index(8, 8), 0.1);
        let x = scalar_times(&b, &[1.0]);
        let y = log_cutoff(&s, &x, &[s.grid_index(24, 24)], 0.2).unwrap();
        assert_eq!(x.values, y.values);
    }

    #[test]
    fn fd_zero_variation() {
        let obj = flat(8, &[c(1.0, 0.0), c(0.0, 1.0)], 1.0, false);
        assert_eq!(fd_second_variation(&obj, &Variation::zero(2, 64), 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn fiber_basis_traceless() {
        let obj = flat(4, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], 8.0, true);
        let dirs = fiber_basis(&obj.system);
        assert_eq!(dirs.len(), 3);
        for d in &dirs {
            assert!(d.iter().sum::<f64>().abs() < 1e-14);
        }
    }
}
