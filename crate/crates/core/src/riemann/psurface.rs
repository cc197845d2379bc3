//! The genus-3 quotient of the Schwarz P surface: Weierstrass data g = z,
//! dh = c·z dz/w on w² = z⁸ + 14z⁴ + 1, with the associate angle recovered
//! from the requirement that the real periods close up into a rank-3 lattice.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::forms::{periods, spinor_normal, weierstrass_spinor, EigenFormSystem, PeriodLattice};
use super::mesh::{p_w_infinity_sheet0, p_w_sheet0, Chart, HyperellipticParams, LogGrid, MeshedSurface};
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 16;
pub const MIN_RESOLUTION: usize = 4;
pub const MAX_RESOLUTION: usize = 64;
/// Closure defect accepted at the solved angle.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-4;
/// Angular samples of the coarse θ sweep over [0, π).
pub const THETA_SAMPLES: usize = 180;
/// Integer relation coefficients range over −RELATION_BOUND..=RELATION_BOUND.
pub const RELATION_BOUND: i32 = 2;

/// A solved P surface together with its construction diagnostics.
#[derive(Clone, Debug)]
pub struct PSurface {
    pub surface: Arc<MeshedSurface>,
    pub grid: LogGrid,
    /// Spinor pair of the Gauss map, g = g0/g1.
    pub g0: Vec<Complex64>,
    pub g1: Vec<Complex64>,
    /// g0'g1 − g0g1' in each node's chart.
    pub gauss_wronskian: Vec<Complex64>,
    /// Weierstrass system with the associate angle applied.
    pub system: EigenFormSystem,
    pub theta: f64,
    pub c: f64,
    pub defect: f64,
    pub defect_curve: Vec<(f64, f64)>,
    pub lattice: PeriodLattice,
    /// Number of loops minus the number of independent integer relations
    /// satisfied within the closure tolerance.
    pub lattice_rank: usize,
    pub relations: Vec<Vec<i32>>,
}

impl PSurface {
    /// Unit normal at every node.
    pub fn normals(&self) -> Vec<[f64; 3]> {
        self.g0.iter().zip(&self.g1).map(|(&a, &b)| spinor_normal(a, b)).collect()
    }

    /// Pointwise −|A|² per unit chart area: −8|g'|²/(1 + |g|²)².
    pub fn curvature_integrand(&self) -> Vec<f64> {
        (0..self.g0.len())
            .map(|i| {
                let d = self.g0[i].norm_sqr() + self.g1[i].norm_sqr();
                -8.0 * self.gauss_wronskian[i].norm_sqr() / (d * d)
            })
            .collect()
    }

    /// −∫|A|² dA by node-weight quadrature.
    pub fn total_curvature_oracle(&self) -> f64 {
        self.curvature_integrand()
            .iter()
            .zip(&self.surface.weights)
            .map(|(a, w)| a * w)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureDefect {
    pub defect: f64,
    pub relations: Vec<Vec<i32>>,
    pub residuals: Vec<f64>,
}

fn relation_candidates(loops: usize) -> Vec<Vec<i32>> {
    let b = RELATION_BOUND;
    let width = (2 * b + 1) as usize;
    let total = width.pow(loops as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut v = Vec::with_capacity(loops);
        let mut x = code;
        for _ in 0..loops {
            v.push((x % width) as i32 - b);
            x /= width;
        }
        // One representative of each ± pair: first nonzero entry positive.
        if let Some(first) = v.iter().find(|&&e| e != 0) {
            if *first > 0 {
                out.push(v);
            }
        }
    }
    out
}

/// Closure defect of real period vectors: the residual of the third
/// independent integer relation (in increasing order of residual) among the
/// loop periods, relative to the longest period. For m = 3 and six loops the
/// periods span a rank-3 lattice exactly when this vanishes.
pub fn closure_defect(loop_periods: &[Vec<f64>], needed: usize) -> ClosureDefect {
    let l = loop_periods.len();
    let m = loop_periods.first().map_or(0, |v| v.len());
    let scale = loop_periods
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut scored: Vec<(f64, Vec<i32>)> = relation_candidates(l)
        .into_iter()
        .map(|coef| {
            let mut acc = vec![0.0; m];
            for (k, &ck) in coef.iter().enumerate() {
                if ck != 0 {
                    for (a, x) in acc.iter_mut().zip(&loop_periods[k]) {
                        *a += ck as f64 * x;
                    }
                }
            }
            (acc.iter().map(|x| x * x).sum::<f64>().sqrt() / scale, coef)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut relations = Vec::new();
    let mut residuals = Vec::new();
    for (res, coef) in scored {
        let mut v: Vec<f64> = coef.iter().map(|&x| x as f64).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.iter().map(|x| x / norm).collect());
            relations.push(coef);
            residuals.push(res);
            if relations.len() == needed {
                break;
            }
        }
    }
    ClosureDefect { defect: residuals.last().copied().unwrap_or(f64::INFINITY), relations, residuals }
}

fn defect_at(complex: &[Vec<Complex64>], theta: f64, needed: usize) -> f64 {
    let rot = Complex64::from_polar(1.0, theta);
    let real: Vec<Vec<f64>> = complex.iter().map(|p| p.iter().map(|z| (z * rot).re).collect()).collect();
    closure_defect(&real, needed).defect
}

fn golden_minimize(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Representative of θ mod π in (−π/2, π/2].
fn centered(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > PI / 2.0 {
        t -= PI;
    }
    t
}

/// Solved associate angle: among the local minima of the closure defect that
/// meet the tolerance, the one closest to θ = 0 (mod π).
pub fn solve_associate_angle(
    complex: &[Vec<Complex64>],
    needed: usize,
    tol: f64,
) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    let n = THETA_SAMPLES;
    let step = PI / n as f64;
    let curve: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = k as f64 * step;
            (t, defect_at(complex, t, needed))
        })
        .collect();
    let mut candidates = Vec::new();
    for k in 0..n {
        let prev = curve[(k + n - 1) % n].1;
        let next = curve[(k + 1) % n].1;
        let here = curve[k].1;
        if here <= prev && here <= next {
            let t0 = curve[k].0;
            let (t, d) = golden_minimize(|t| defect_at(complex, t, needed), t0 - step, t0 + step, 80);
            // Keep the sample itself when it is already better (exact hits).
            let (t, d) = if here <= d { (t0, here) } else { (t, d) };
            candidates.push((t.rem_euclid(PI), d));
        }
    }
    let best_defect = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let chosen = candidates
        .iter()
        .filter(|c| c.1 <= tol)
        .min_by(|a, b| centered(a.0).abs().total_cmp(&centered(b.0).abs()));
    match chosen {
        Some(&(t, d)) => {
            let t = if (t - PI).abs() < 1e-12 { 0.0 } else { t };
            Ok((t, d, curve))
        }
        None => Err(Error::Construction {
            message: "no associate angle closes the periods".into(),
            best_defect,
            defect_curve: curve,
        }),
    }
}

/// Spinor data, λ and the chart derivative of the Gauss map on the P mesh.
fn p_weierstrass_data(surface: &MeshedSurface) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let n = surface.len();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let w_origin = p_w_sheet0(zero);
    let (mut g0, mut g1, mut lam, mut wr) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for node in &surface.nodes {
        let sign = if node.sheet == 0 { 1.0 } else { -1.0 };
        match node.chart {
            Chart::Log => {
                let z = node.coord.exp();
                let w = sign * p_w_sheet0(z);
                g0.push(z);
                g1.push(one);
                lam.push(z / w);
                wr.push(z);
            }
            Chart::PoleZero | Chart::Plane => {
                g0.push(zero);
                g1.push(one);
                lam.push(one / (sign * w_origin));
                wr.push(one);
            }
            Chart::PoleInfinity => {
                let w = sign * p_w_infinity_sheet0(zero);
                g0.push(one);
                g1.push(zero);
                lam.push(-one / w);
                wr.push(-one);
            }
        }
    }
    (g0, g1, lam, wr)
}

pub fn build_p_surface(resolution: usize) -> Result<PSurface> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::Domain(format!(
            "resolution {resolution} outside {MIN_RESOLUTION}..={MAX_RESOLUTION}"
        )));
    }
    build_p_surface_with(HyperellipticParams::from_resolution(resolution), DEFAULT_CLOSURE_TOL)
}

pub fn build_p_surface_with(params: HyperellipticParams, tol: f64) -> Result<PSurface> {
    let (mesh, grid) = MeshedSurface::hyperelliptic_p(params)?;
    let surface = Arc::new(mesh);
    let (g0, g1, lam, wr) = p_weierstrass_data(&surface);
    let raw = weierstrass_spinor(surface.clone(), &g0, &g1, &lam, 0.0)?;
    let raw_lattice = periods(&raw)?;
    let longest = raw_lattice
        .complex_periods
        .iter()
        .map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if !(longest > 0.0) {
        return Err(Error::Consistency("vanishing periods".into()));
    }
    let c = 1.0 / longest;
    let lam: Vec<Complex64> = lam.iter().map(|l| l * c).collect();
    let base = weierstrass_spinor(surface.clone(), &g0, &g1, &lam, 0.0)?;
    let base_lattice = periods(&base)?;
    let needed = base_lattice.complex_periods.len() - base.m();
    let (theta, defect, curve) = solve_associate_angle(&base_lattice.complex_periods, needed, tol)?;
    let system = base.rotated(theta);
    let lattice = base_lattice.rotated(theta, &system.r);
    let cd = closure_defect(&lattice.loop_periods, lattice.loop_periods.len());
    let closing = cd.residuals.iter().filter(|&&r| r <= tol).count();
    Ok(PSurface {
        surface,
        grid,
        g0,
        g1,
        gauss_wronskian: wr,
        system,
        theta,
        c,
        defect,
        defect_curve: curve,
        lattice_rank: lattice.loop_periods.len() - closing,
        relations: cd.relations.into_iter().take(closing).collect(),
        lattice,
    })
}
