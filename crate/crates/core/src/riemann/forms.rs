//! Sampled holomorphic 1-forms and the quantities built from them.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::MeshedSurface;
use crate::error::{Error, Result};

/// Default bound on the discrete Cauchy–Riemann residual.
pub const HOLOMORPHIC_TOL: f64 = 0.05;
/// Tracelessness tolerance Σ r_i φ_i = 0.
pub const TRACE_TOL: f64 = 1e-10;
/// Relative tolerance for the numerical rank of a period matrix.
pub const RANK_TOL: f64 = 1e-8;

/// Chart coefficients of a 1-form at every node of a surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormField {
    pub values: Vec<Complex64>,
    /// False for fields that are deliberately not holomorphic.
    pub holomorphic: bool,
}

impl FormField {
    pub fn holomorphic(values: Vec<Complex64>) -> Self {
        Self { values, holomorphic: true }
    }

    pub fn unchecked(values: Vec<Complex64>) -> Self {
        Self { values, holomorphic: false }
    }
}

/// Chart distance around critical nodes left out of the holomorphicity check.
pub const CRITICAL_STANDOFF: f64 = 0.2;

/// Discrete Cauchy–Riemann residual: max over interior nodes of |∂̄φ|
/// relative to the largest |∂φ| among those nodes. Nodes within
/// `CRITICAL_STANDOFF` (in stencil steps of the mesh spacing) of a critical
/// node, and nodes whose stencil crosses charts, are skipped.
pub fn holomorphicity_residual(surface: &MeshedSurface, values: &[Complex64]) -> f64 {
    let hops = (CRITICAL_STANDOFF / surface.spacing).ceil() as usize;
    let near = surface.critical_neighbourhood(hops.max(1));
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..surface.len() {
        // Form coefficients are chart-dependent; mixed-chart stencils only
        // differentiate functions.
        let chart = surface.nodes[i].chart;
        if !surface.interior[i] || near[i] || surface.stencil[i].iter().any(|&(j, _)| surface.nodes[j].chart != chart) {
            continue;
        }
        num = num.max(surface.dzbar_at(values, i).norm());
        den = den.max(surface.dz_at(values, i).norm());
    }
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if den == 0.0 {
        if num <= 1e-14 * scale.max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// m sampled 1-forms with multiplicities r_i and metric scale κ.
///
/// Inner products of m-vectors are κ Σ r_i x_i ȳ_i; κ = 2n for data coming
/// from a diagonal of sl(n) and κ = 1 for maps to Euclidean ℝ^m.
#[derive(Clone, Debug)]
pub struct EigenFormSystem {
    pub surface: Arc<MeshedSurface>,
    pub forms: Vec<FormField>,
    pub r: Vec<u32>,
    pub kappa: f64,
    pub traceless: bool,
}

impl EigenFormSystem {
    pub fn new(
        surface: Arc<MeshedSurface>,
        forms: Vec<FormField>,
        r: Vec<u32>,
        kappa: f64,
        traceless: bool,
    ) -> Result<Self> {
        if forms.is_empty() || forms.len() != r.len() {
            return Err(Error::Domain("need m >= 1 forms with one multiplicity each".into()));
        }
        if r.iter().any(|&x| x == 0) || !(kappa > 0.0) {
            return Err(Error::Domain("multiplicities and metric scale must be positive".into()));
        }
        if forms.iter().any(|f| f.values.len() != surface.len()) {
            return Err(Error::Domain("form sampled on a different surface".into()));
        }
        let sys = Self { surface, forms, r, kappa, traceless };
        if traceless {
            let res = sys.trace_residual();
            if res > TRACE_TOL {
                return Err(Error::Consistency(format!("Σ r_i φ_i = {res:.3e} is not zero")));
            }
        }
        Ok(sys)
    }

    /// Builds the system and verifies holomorphicity of flagged forms.
    pub fn new_checked(
        surface: Arc<MeshedSurface>,
        forms: Vec<FormField>,
        r: Vec<u32>,
        kappa: f64,
        traceless: bool,
        holomorphic_tol: f64,
    ) -> Result<Self> {
        let sys = Self::new(surface, forms, r, kappa, traceless)?;
        for (i, f) in sys.forms.iter().enumerate() {
            if f.holomorphic {
                let res = holomorphicity_residual(&sys.surface, &f.values);
                if res > holomorphic_tol {
                    return Err(Error::Consistency(format!("form {i} has Cauchy-Riemann residual {res:.3e}")));
                }
            }
        }
        Ok(sys)
    }

    pub fn m(&self) -> usize {
        self.forms.len()
    }

    pub fn at(&self, node: usize) -> Vec<Complex64> {
        self.forms.iter().map(|f| f.values[node]).collect()
    }

    /// max |Σ r_i φ_i| relative to the largest component.
    pub fn trace_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for n in 0..self.surface.len() {
            let mut s = Complex64::new(0.0, 0.0);
            for (f, &r) in self.forms.iter().zip(&self.r) {
                s += f.values[n] * r as f64;
                scale = scale.max(f.values[n].norm());
            }
            worst = worst.max(s.norm());
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Σ r_i |φ_i|² at a node (without κ).
    pub fn energy_at(&self, node: usize) -> f64 {
        self.forms.iter().zip(&self.r).map(|(f, &r)| r as f64 * f.values[node].norm_sqr()).sum()
    }

    /// Σ r_i φ_i² at a node (without κ).
    pub fn hopf_at(&self, node: usize) -> Complex64 {
        self.forms.iter().zip(&self.r).map(|(f, &r)| r as f64 * f.values[node] * f.values[node]).sum()
    }

    /// Copy with every form rotated by e^{iθ}.
    pub fn rotated(&self, theta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        let mut out = self.clone();
        for f in &mut out.forms {
            for v in &mut f.values {
                *v *= rot;
            }
        }
        out
    }
}

/// Weierstrass data e^{iθ}(½(1/g − g), (i/2)(1/g + g), 1)·dh with g finite
/// and nonzero at every node.
pub fn weierstrass_forms(
    surface: Arc<MeshedSurface>,
    g: &[Complex64],
    dh: &[Complex64],
    theta: f64,
) -> Result<EigenFormSystem> {
    let mut g0 = Vec::with_capacity(g.len());
    let mut lambda = Vec::with_capacity(g.len());
    for (node, (&gv, &h)) in g.iter().zip(dh).enumerate() {
        if !gv.is_finite() || gv.norm() == 0.0 {
            return Err(Error::SingularData { node, reason: format!("Gauss map value {gv}") });
        }
        g0.push(gv);
        lambda.push(h / gv);
    }
    let g1 = vec![Complex64::new(1.0, 0.0); g.len()];
    weierstrass_spinor(surface, &g0, &g1, &lambda, theta)
}

/// Weierstrass data in homogeneous form: with g = g₀/g₁ and λ = dh/(g₀g₁),
/// φ = e^{iθ}(½(g₁² − g₀²), (i/2)(g₁² + g₀²), g₀g₁)·λ. Poles and zeros of
/// g are then ordinary values of the spinor pair.
pub fn weierstrass_spinor(
    surface: Arc<MeshedSurface>,
    g0: &[Complex64],
    g1: &[Complex64],
    lambda: &[Complex64],
    theta: f64,
) -> Result<EigenFormSystem> {
    let n = surface.len();
    if g0.len() != n || g1.len() != n || lambda.len() != n {
        return Err(Error::Domain("Weierstrass data sampled on a different surface".into()));
    }
    let rot = Complex64::from_polar(1.0, theta);
    let i = Complex64::new(0.0, 1.0);
    let mut phi = vec![Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for node in 0..n {
        let (a, b, l) = (g0[node], g1[node], lambda[node]);
        if !(a.is_finite() && b.is_finite() && l.is_finite()) || (a.norm() == 0.0 && b.norm() == 0.0) {
            return Err(Error::SingularData { node, reason: "degenerate spinor data".into() });
        }
        let s = l * rot;
        phi[0].push(0.5 * (b * b - a * a) * s);
        phi[1].push(0.5 * i * (b * b + a * a) * s);
        phi[2].push(a * b * s);
    }
    let forms = phi.into_iter().map(FormField::holomorphic).collect();
    EigenFormSystem::new(surface, forms, vec![1, 1, 1], 1.0, false)
}

/// Unit normal from the spinor pair of the Gauss map.
pub fn spinor_normal(g0: Complex64, g1: Complex64) -> [f64; 3] {
    let p = g0 * g1.conj();
    let d = g0.norm_sqr() + g1.norm_sqr();
    [2.0 * p.re / d, 2.0 * p.im / d, (g0.norm_sqr() - g1.norm_sqr()) / d]
}

/// max over nodes of |Σ r_i φ_i²| divided by max over nodes and components of
/// r_i|φ_i|².
pub fn conformality_residual(sys: &EigenFormSystem) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for node in 0..sys.surface.len() {
        num = num.max(sys.hopf_at(node).norm());
        for (f, &r) in sys.forms.iter().zip(&sys.r) {
            den = den.max(r as f64 * f.values[node].norm_sqr());
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Area density √(e² − |Hopf|²) per unit chart area, with
/// e = 2κ Σ r_i|φ_i|² and Hopf = 2κ Σ r_i φ_i².
pub fn area_density(sys: &EigenFormSystem) -> Result<Vec<f64>> {
    (0..sys.surface.len())
        .map(|node| density_from(sys.kappa, sys.energy_at(node), sys.hopf_at(node), node))
        .collect()
}

pub(crate) fn density_from(kappa: f64, energy: f64, hopf: Complex64, node: usize) -> Result<f64> {
    let e = 2.0 * kappa * energy;
    let h = 2.0 * kappa * hopf.norm();
    let rad = (e - h) * (e + h);
    if rad < -1e-12 * e * e.max(1.0) {
        return Err(Error::Consistency(format!("negative area radicand {rad:.3e} at node {node}")));
    }
    Ok(rad.max(0.0).sqrt())
}

/// Total area by node-weight quadrature.
pub fn total_area(sys: &EigenFormSystem) -> Result<f64> {
    let d = area_density(sys)?;
    Ok(d.iter().zip(&sys.surface.weights).map(|(a, w)| a * w).sum())
}

/// Real periods of a system along the surface loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodLattice {
    pub loop_names: Vec<String>,
    /// Complex loop integrals ∮ φ_i.
    pub complex_periods: Vec<Vec<Complex64>>,
    /// √r_i Re ∮ φ_i, one m-vector per loop.
    pub loop_periods: Vec<Vec<f64>>,
    pub rank: usize,
}

impl PeriodLattice {
    pub fn from_complex(names: Vec<String>, complex: Vec<Vec<Complex64>>, r: &[u32]) -> Self {
        let loop_periods: Vec<Vec<f64>> = complex
            .iter()
            .map(|p| p.iter().zip(r).map(|(z, &ri)| (ri as f64).sqrt() * z.re).collect())
            .collect();
        let rank = numerical_rank(&loop_periods, RANK_TOL);
        Self { loop_names: names, complex_periods: complex, loop_periods, rank }
    }

    /// Periods of the system rotated by e^{iθ}.
    pub fn rotated(&self, theta: f64, r: &[u32]) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        let complex = self.complex_periods.iter().map(|p| p.iter().map(|z| z * rot).collect()).collect();
        Self::from_complex(self.loop_names.clone(), complex, r)
    }

    /// Largest Euclidean length among the loop period vectors.
    pub fn scale(&self) -> f64 {
        self.loop_periods
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

pub fn numerical_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Trapezoid periods of every form along every surface loop.
pub fn periods(sys: &EigenFormSystem) -> Result<PeriodLattice> {
    let s = &sys.surface;
    if s.loops.is_empty() {
        return Err(Error::Geometry("surface has no homology loops".into()));
    }
    let mut complex = Vec::with_capacity(s.loops.len());
    for lp in &s.loops {
        let row = sys
            .forms
            .iter()
            .map(|f| s.line_integral(&f.values, lp))
            .collect::<Result<Vec<_>>>()?;
        complex.push(row);
    }
    let names = s.loops.iter().map(|l| l.name.clone()).collect();
    Ok(PeriodLattice::from_complex(names, complex, &sys.r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_system(vals: &[Complex64], r: Vec<u32>) -> EigenFormSystem {
        let s = Arc::new(MeshedSurface::flat_torus(4).unwrap());
        let forms = vals.iter().map(|&v| FormField::holomorphic(vec![v; s.len()])).collect();
        EigenFormSystem::new(s, forms, r, 1.0, false).unwrap()
    }

    #[test]
    fn conformality_examples() {
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let sys = constant_system(&[c(1.0, 0.0), w, w * w], vec![1, 1, 1]);
        assert!(conformality_residual(&sys) < 1e-15);
        let sys = constant_system(&[c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)], vec![1, 1, 1]);
        assert!((conformality_residual(&sys) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        let sys = constant_system(&[c(1.0, 0.0), c(0.0, 1.0)], vec![1, 1]);
        let d = area_density(&sys).unwrap();
        assert!((d[0] - 4.0).abs() < 1e-15);
        let sys = constant_system(&[c(0.0, 0.0), c(0.0, 0.0)], vec![1, 1]);
        assert_eq!(area_density(&sys).unwrap()[0], 0.0);
        let sys = constant_system(&[c(1.0, 0.0), c(0.0, 0.0)], vec![1, 1]);
        assert_eq!(area_density(&sys).unwrap()[0], 0.0);
    }

    #[test]
    fn torus_period_of_constant() {
        let sys = constant_system(&[c(0.7, -0.4)], vec![1]);
        let lat = periods(&sys).unwrap();
        assert!((lat.loop_periods[0][0] - 0.7).abs() < 1e-14);
        assert!((lat.loop_periods[1][0] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn exact_form_has_zero_period() {
        let s = Arc::new(MeshedSurface::planar_grid(-1.0, 1.0, -1.0, 1.0, 41, 41).unwrap());
        // d(z³) = 3z² dz
        let f: Vec<_> = s.nodes.iter().map(|n| 3.0 * n.coord * n.coord).collect();
        let lp = s.grid_rectangle(5, 7, 30, 33).unwrap();
        let v = s.line_integral(&f, &lp).unwrap();
        assert!(v.norm() < 1e-2, "{v}");
    }

    #[test]
    fn weierstrass_rejects_zero_gauss_map() {
        let s = Arc::new(MeshedSurface::planar_grid(-1.0, 1.0, -1.0, 1.0, 5, 5).unwrap());
        let g: Vec<_> = s.nodes.iter().map(|n| n.coord).collect();
        let dh = vec![c(1.0, 0.0); s.len()];
        assert!(matches!(weierstrass_forms(s, &g, &dh, 0.0), Err(Error::SingularData { .. })));
    }

    #[test]
    fn traceless_flag_is_checked() {
        let s = Arc::new(MeshedSurface::flat_torus(4).unwrap());
        let forms = vec![FormField::holomorphic(vec![c(1.0, 0.0); s.len()]); 2];
        assert!(EigenFormSystem::new(s.clone(), forms, vec![1, 1], 4.0, true).is_err());
        let forms = vec![
            FormField::holomorphic(vec![c(1.0, 0.0); s.len()]),
            FormField::holomorphic(vec![c(-1.0, 0.0); s.len()]),
        ];
        assert!(EigenFormSystem::new(s, forms, vec![1, 1], 4.0, true).is_ok());
    }
}
