//! Spectral data of sampled characteristic coefficients: discriminant zeros
//! and the permutation of eigenvalue branches along closed paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::{Loop, MeshedSurface};
use crate::error::{Error, Result};
use crate::lie_sl::HitchinBasePoint;
use crate::poly;

/// Default minimum separation of tracked roots.
pub const DEFAULT_ROOT_SEPARATION: f64 = 1e-6;

/// A permutation p of {0..m}: branch i at the start continues to branch p[i].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    /// First `self`, then `next`.
    pub fn then(&self, next: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&i| next.0[i]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Ascending coefficients of z^n + Σ_{k≥2} (−1)^k α_k z^{n−k}, taking
/// `alpha = (α_2, …, α_n)`.
pub fn characteristic_from_alpha(alpha: &[Complex64]) -> Vec<Complex64> {
    let n = alpha.len() + 1;
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    for (idx, a) in alpha.iter().enumerate() {
        let k = idx + 2;
        c[n - k] = if k % 2 == 0 { *a } else { -*a };
    }
    c
}

pub fn discriminant_from_alpha(alpha: &[Complex64]) -> Complex64 {
    poly::discriminant_from_roots(&poly::roots(&characteristic_from_alpha(alpha)))
}

/// Nodes at which |disc| is a local minimum over the stencil neighbours and
/// below `threshold` times the largest |disc| on the surface. The discriminant
/// is holomorphic, so its modulus has no interior minima away from zeros.
pub fn critical_set(surface: &MeshedSurface, base: &HitchinBasePoint, threshold: f64) -> Vec<usize> {
    let disc: Vec<f64> = (0..base.len()).map(|i| discriminant_from_alpha(&base.at(i)).norm()).collect();
    let top = disc.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return (0..disc.len()).collect();
    }
    (0..disc.len())
        .filter(|&i| {
            disc[i] <= threshold * top && surface.stencil[i].iter().all(|&(j, _)| disc[i] <= disc[j])
        })
        .collect()
}

/// Branch permutation of the roots along a closed path. `alpha` gives
/// (α_2, …, α_n) at a point of the path.
pub fn eigenform_monodromy(
    alpha: impl Fn(Complex64) -> Vec<Complex64>,
    path: &[Complex64],
    separation: f64,
) -> Result<Permutation> {
    if path.len() < 3 || (path[0] - path[path.len() - 1]).norm() > 1e-12 * (1.0 + path[0].norm()) {
        return Err(Error::Geometry("monodromy path is not closed".into()));
    }
    let samples: Vec<Vec<Complex64>> = path.iter().map(|&z| alpha(z)).collect();
    track(&samples, separation)
}

/// Monodromy along a node loop of a surface carrying sampled coefficients.
pub fn eigenform_monodromy_sampled(
    base: &HitchinBasePoint,
    surface: &MeshedSurface,
    lp: &Loop,
    separation: f64,
) -> Result<Permutation> {
    surface.check_loop(lp)?;
    let samples: Vec<Vec<Complex64>> = lp.nodes.iter().map(|&i| base.at(i)).collect();
    track(&samples, separation)
}

fn sorted_roots(alpha: &[Complex64]) -> Vec<Complex64> {
    let mut r = poly::roots(&characteristic_from_alpha(alpha));
    r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    r
}

fn min_separation(r: &[Complex64]) -> f64 {
    let mut s = f64::INFINITY;
    for i in 0..r.len() {
        for j in (i + 1)..r.len() {
            s = s.min((r[i] - r[j]).norm());
        }
    }
    s
}

fn track(samples: &[Vec<Complex64>], separation: f64) -> Result<Permutation> {
    let start = sorted_roots(&samples[0]);
    let m = start.len();
    let mut current = start.clone();
    for (step, alpha) in samples.iter().enumerate().skip(1) {
        let next = sorted_roots(alpha);
        let gap = min_separation(&next);
        if gap < separation {
            return Err(Error::Continuation { step, reason: format!("roots collide (gap {gap:.3e})") });
        }
        let mut used = vec![false; m];
        let mut moved = vec![Complex64::new(0.0, 0.0); m];
        for (i, cur) in current.iter().enumerate() {
            let (j, d) = next
                .iter()
                .enumerate()
                .map(|(j, z)| (j, (z - cur).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            if used[j] || d >= 0.5 * gap {
                return Err(Error::Continuation {
                    step,
                    reason: "ambiguous continuation; refine the path".into(),
                });
            }
            used[j] = true;
            moved[i] = next[j];
        }
        current = moved;
    }
    let mut perm = Vec::with_capacity(m);
    for cur in &current {
        let (j, _) = start
            .iter()
            .enumerate()
            .map(|(j, z)| (j, (z - cur).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        perm.push(j);
    }
    Ok(Permutation(perm))
}

/// Closed path from `basepoint` out to a circle about `center`, once around
/// it (counterclockwise) and back. `samples` points per unit of length.
pub fn lasso(basepoint: Complex64, center: Complex64, radius: f64, density: usize) -> Vec<Complex64> {
    let dir = basepoint - center;
    let start_angle = dir.arg();
    let entry = center + Complex64::from_polar(radius, start_angle);
    let mut path = segment(basepoint, entry, density);
    let n_arc = ((2.0 * PI * radius) * density as f64).ceil().max(16.0) as usize;
    for k in 1..=n_arc {
        let a = start_angle + 2.0 * PI * k as f64 / n_arc as f64;
        path.push(center + Complex64::from_polar(radius, a));
    }
    let back = segment(entry, basepoint, density);
    path.extend(back.into_iter().skip(1));
    *path.last_mut().expect("nonempty") = basepoint;
    path
}

fn segment(a: Complex64, b: Complex64, density: usize) -> Vec<Complex64> {
    let n = (((b - a).norm()) * density as f64).ceil().max(1.0) as usize;
    (0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect()
}

/// Concatenation of closed paths sharing a basepoint.
pub fn concat(paths: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for p in paths {
        if out.is_empty() {
            out.extend_from_slice(p);
        } else {
            out.extend(p.iter().skip(1));
        }
    }
    out
}

/// Path with every segment subdivided into `factor` pieces.
pub fn refine(path: &[Complex64], factor: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(path.len() * factor);
    for w in path.windows(2) {
        for k in 0..factor {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / factor as f64));
        }
    }
    out.push(*path.last().expect("nonempty"));
    out
}
