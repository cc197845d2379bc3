//! Small dense complex polynomials: root finding and discriminants.
//!
//! Coefficients are stored in ascending order, `c[i]` multiplies `z^i`.

use num_complex::Complex64;

/// Evaluates the polynomial and its derivative at `z` (Horner).
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Expands `prod (z - r_i)` into ascending coefficients.
pub fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); out.len() + 1];
        for (i, c) in out.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        out = next;
    }
    out
}

/// Roots of a polynomial with nonzero leading coefficient, by Aberth-Ehrlich
/// iteration followed by a Newton polish.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    if deg == 1 {
        return vec![-monic[0]];
    }
    // Cauchy bound for the initial circle.
    let bound = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = 0.5 * bound;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Newton polish on the original polynomial.
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(&monic, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() < 1e-17 * (1.0 + r.norm()) {
                break;
            }
            *r -= step;
        }
    }
    z
}

/// Discriminant `prod_{i<j} (r_i - r_j)^2` of a monic polynomial, from its roots.
pub fn discriminant_from_roots(roots: &[Complex64]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            let diff = roots[i] - roots[j];
            d *= diff * diff;
        }
    }
    d
}
