//! Diagonal toral data of sl(n), invariant polynomials, a companion-matrix
//! section of the characteristic map, and generic isometric embeddings of
//! ℝ^l into the Cartan subalgebra of diagonal trace-zero matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Tolerance on |Σ λ_i| accepted for a trace-zero diagonal.
pub const TRACE_TOL: f64 = 1e-12;
/// Default relative separation below which two eigenvalues count as equal.
pub const DEFAULT_SEPARATION: f64 = 1e-9;
/// Trials allowed when searching for a separating isometry.
pub const ISOMETRY_TRIALS: usize = 1000;

/// A diagonal element of sl(n, ℂ), stored by its eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToralElement {
    entries: Vec<Complex64>,
}

impl ToralElement {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Domain(format!("rank parameter n = {} < 2", entries.len())));
        }
        let scale = entries.iter().map(|e| e.norm()).fold(1.0, f64::max);
        let trace: Complex64 = entries.iter().sum();
        if trace.norm() > TRACE_TOL * scale {
            return Err(Error::Domain(format!("trace {trace} is not zero")));
        }
        Ok(Self { entries })
    }

    /// Real entries; convenient for split-real data.
    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

/// The invariant polynomials p_2, …, p_n of sl(n).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantPolynomialBasis {
    pub n: usize,
    pub degrees: Vec<usize>,
}

impl InvariantPolynomialBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("rank parameter n = {n} < 2")));
        }
        Ok(Self { n, degrees: (2..=n).collect() })
    }

    /// Evaluates (p_2(λ), …, p_n(λ)).
    pub fn evaluate(&self, lambda: &ToralElement) -> Result<Vec<Complex64>> {
        if lambda.n() != self.n {
            return Err(Error::Domain(format!("expected n = {}, got {}", self.n, lambda.n())));
        }
        self.degrees.iter().map(|&k| elementary_symmetric(k, lambda)).collect()
    }
}

/// Sampled coefficient fields α_2, …, α_n of a point of the Hitchin base.
///
/// `alphas[k][node]` holds α_{k+2} in the chart coordinate of `node`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HitchinBasePoint {
    pub n: usize,
    pub alphas: Vec<Vec<Complex64>>,
}

impl HitchinBasePoint {
    pub fn new(alphas: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = alphas.len() + 1;
        if n < 2 {
            return Err(Error::Domain("at least α_2 is required".into()));
        }
        let len = alphas[0].len();
        if alphas.iter().any(|a| a.len() != len) {
            return Err(Error::Domain("coefficient fields have different sample counts".into()));
        }
        Ok(Self { n, alphas })
    }

    /// The Hitchin image of a field of diagonal elements, node by node.
    pub fn from_toral_field(field: &[ToralElement]) -> Result<Self> {
        let n = field.first().map(|t| t.n()).ok_or_else(|| Error::Domain("empty field".into()))?;
        let basis = InvariantPolynomialBasis::new(n)?;
        let mut alphas = vec![Vec::with_capacity(field.len()); n - 1];
        for t in field {
            for (k, v) in basis.evaluate(t)?.into_iter().enumerate() {
                alphas[k].push(v);
            }
        }
        Self::new(alphas)
    }

    pub fn len(&self) -> usize {
        self.alphas[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (α_2, …, α_n) at one node.
    pub fn at(&self, node: usize) -> Vec<Complex64> {
        self.alphas.iter().map(|a| a[node]).collect()
    }
}

/// The k-th elementary symmetric polynomial of the entries.
pub fn elementary_symmetric(k: usize, lambda: &ToralElement) -> Result<Complex64> {
    let n = lambda.n();
    if k < 1 || k > n {
        return Err(Error::Domain(format!("degree {k} outside 1..={n}")));
    }
    // e[j] after processing a prefix holds e_j of that prefix.
    let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, a) in lambda.entries().iter().enumerate() {
        for j in (1..=(i + 1).min(k)).rev() {
            let prev = e[j - 1];
            e[j] += prev * a;
        }
    }
    Ok(e[k])
}

/// Ascending coefficients of Σ_i (−1)^{n−i} p_{n−i}(λ) z^i, with p_0 = 1.
pub fn characteristic_coefficients(lambda: &ToralElement) -> Vec<Complex64> {
    let n = lambda.n();
    (0..=n)
        .map(|i| {
            let k = n - i;
            let p = if k == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                elementary_symmetric(k, lambda).expect("degree in range")
            };
            if k % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .collect()
}

/// True when every pair of entries is separated by more than
/// `separation · max|λ_i|`.
pub fn is_regular_semisimple(lambda: &ToralElement, separation: f64) -> bool {
    let e = lambda.entries();
    let scale = e.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let tol = separation * scale;
    if scale == 0.0 {
        return false;
    }
    for i in 0..e.len() {
        for j in (i + 1)..e.len() {
            if (e[i] - e[j]).norm() <= tol {
                return false;
            }
        }
    }
    true
}

/// Companion matrix whose characteristic polynomial is
/// z^n + Σ_{k=2}^n (−1)^k α_k z^{n−k}; takes `alpha = (α_2, …, α_n)`.
pub fn companion_matrix(alpha: &[Complex64]) -> DMatrix<Complex64> {
    let n = alpha.len() + 1;
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    // Last column holds −c_j where c_j is the coefficient of z^j.
    for (idx, a) in alpha.iter().enumerate() {
        let k = idx + 2;
        let c = if k % 2 == 0 { *a } else { -*a };
        m[(n - k, n - 1)] = -c;
    }
    m
}

/// Ascending characteristic-polynomial coefficients of a square matrix via
/// its eigenvalues.
pub fn matrix_characteristic(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let eig = m.clone().eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>());
    match eig {
        Some(ev) => poly::from_roots(&ev),
        None => faddeev_leverrier(m),
    }
}

/// Characteristic polynomial by Faddeev-LeVerrier, ascending.
pub fn faddeev_leverrier(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut mk = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk + &id * coeffs[n - k + 1];
        let amk = m * &mk;
        coeffs[n - k] = -amk.trace() / k as f64;
    }
    coeffs
}

/// Orthonormal basis of the trace-zero hyperplane of ℝ^n under the
/// `2n·Σ x_i y_i` metric, as the rows of an (n−1)×n matrix.
pub fn helmert_basis(n: usize) -> DMatrix<f64> {
    let scale = 1.0 / (2.0 * n as f64).sqrt();
    let mut h = DMatrix::zeros(n - 1, n);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for j in 0..k {
            h[(k - 1, j)] = scale / norm;
        }
        h[(k - 1, k)] = -scale * k as f64 / norm;
    }
    h
}

/// Haar-random element of SO(d) from the QR factorization of a Gaussian matrix.
pub fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Smallest over pairs (i, j) of the largest sample difference between
/// embedded components i and j. `samples[k]` is component k of the source.
pub fn separation_margin(g: &DMatrix<f64>, samples: &[Vec<Complex64>]) -> f64 {
    let (l, n) = g.shape();
    let len = samples.first().map_or(0, |s| s.len());
    let mut worst = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best: f64 = 0.0;
            for s in 0..len {
                let mut d = Complex64::new(0.0, 0.0);
                for k in 0..l {
                    d += samples[k][s] * (g[(k, i)] - g[(k, j)]);
                }
                best = best.max(d.norm());
            }
            worst = worst.min(best);
        }
    }
    worst
}

/// A linear isometry ℝ^l → (trace-zero diagonals, 2n·tr) under which no two of
/// the n embedded components coincide on all samples. Rows of the result are
/// the images of the standard basis vectors.
pub fn generic_isometry(l: usize, n: usize, samples: &[Vec<Complex64>], seed: u64) -> Result<DMatrix<f64>> {
    if n < 2 || l == 0 || l > n - 1 {
        return Err(Error::Domain(format!("need 1 <= l <= n-1, got l={l}, n={n}")));
    }
    if samples.len() != l {
        return Err(Error::Domain(format!("expected {l} components, got {}", samples.len())));
    }
    let scale = samples
        .iter()
        .flat_map(|s| s.iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Genericity("samples vanish identically".into()));
    }
    let base = helmert_basis(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = 1e-8 * scale;
    for _ in 0..ISOMETRY_TRIALS {
        let rot = random_rotation(n - 1, &mut rng);
        let full = rot * &base;
        let g = full.rows(0, l).into_owned();
        if separation_margin(&g, samples) > threshold {
            return Ok(g);
        }
    }
    Err(Error::Genericity(format!("no separating isometry in {ISOMETRY_TRIALS} trials")))
}

/// Gram matrix of the rows of `g` in the `2n·Σ x_i y_i` metric.
pub fn target_gram(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.ncols() as f64;
    (g * g.transpose()) * (2.0 * n)
}

/// Embeds an l-vector into ℝ^n through the rows of `g`.
pub fn embed(g: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    g.transpose() * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn elementary_examples() {
        let t = ToralElement::from_real(&[1.0, -1.0, 0.0]).unwrap();
        assert!(elementary_symmetric(1, &t).unwrap().norm() < 1e-15);
        let t = ToralElement::from_real(&[1.0, 2.0, -3.0]).unwrap();
        assert!((elementary_symmetric(2, &t).unwrap() - c(-7.0, 0.0)).norm() < 1e-14);
        let t = ToralElement::from_real(&[1.0, -1.0]).unwrap();
        assert!((elementary_symmetric(2, &t).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(elementary_symmetric(3, &t).is_err());
        assert!(elementary_symmetric(0, &t).is_err());
    }

    #[test]
    fn rejects_bad_toral() {
        assert!(ToralElement::from_real(&[1.0]).is_err());
        assert!(ToralElement::from_real(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn characteristic_examples() {
        let t = ToralElement::from_real(&[1.0, -1.0]).unwrap();
        let q = characteristic_coefficients(&t);
        assert_eq!(q, vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);

        let t = ToralElement::from_real(&[0.0; 4]).unwrap();
        let q = characteristic_coefficients(&t);
        assert_eq!(q[4], c(1.0, 0.0));
        assert!(q[..4].iter().all(|x| x.norm() == 0.0));

        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let t = ToralElement::new(vec![c(1.0, 0.0), w, w * w]).unwrap();
        let q = characteristic_coefficients(&t);
        let expect = [c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        for (a, b) in q.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn regular_semisimple_examples() {
        let t = |v: &[f64]| ToralElement::from_real(v).unwrap();
        assert!(is_regular_semisimple(&t(&[1.0, -1.0, 0.0]), DEFAULT_SEPARATION));
        assert!(!is_regular_semisimple(&t(&[1.0, 1.0, -2.0]), DEFAULT_SEPARATION));
        assert!(!is_regular_semisimple(&t(&[0.0, 0.0]), DEFAULT_SEPARATION));
    }

    #[test]
    fn companion_examples() {
        let m = companion_matrix(&[c(-1.0, 0.0)]);
        let q = faddeev_leverrier(&m);
        assert!((q[0] + 1.0).norm() < 1e-14 && q[1].norm() < 1e-14);
        assert!(m.trace().norm() == 0.0);

        let m = companion_matrix(&[c(0.0, 0.0); 3]);
        let q = faddeev_leverrier(&m);
        assert!(q[..4].iter().all(|x| x.norm() < 1e-14));

        let m = companion_matrix(&[c(-1.0, 0.0), c(0.0, 0.0)]);
        let mut ev: Vec<f64> = m.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helmert_is_orthonormal() {
        for n in 2..7 {
            let h = helmert_basis(n);
            let gram = target_gram(&h);
            assert!((gram - DMatrix::identity(n - 1, n - 1)).amax() < 1e-14);
            for r in 0..n - 1 {
                assert!(h.row(r).sum().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn isometry_one_dimensional() {
        let samples = vec![vec![c(1.0, 0.5), c(-0.3, 2.0)]];
        let g = generic_isometry(1, 2, &samples, 0).unwrap();
        let target = 1.0 / 8f64.sqrt();
        assert!((g[(0, 0)].abs() - target).abs() < 1e-14);
        assert!((g[(0, 0)] + g[(0, 1)]).abs() < 1e-15);
    }

    #[test]
    fn isometry_rejects_zero_samples() {
        let samples = vec![vec![c(0.0, 0.0); 4]; 2];
        assert!(matches!(generic_isometry(2, 4, &samples, 1), Err(Error::Genericity(_))));
    }

    #[test]
    fn isometry_separates_constant_input() {
        let v = c(0.7, -0.2);
        let samples = vec![vec![v; 3]; 3];
        let g = generic_isometry(3, 4, &samples, 3).unwrap();
        assert!(separation_margin(&g, &samples) > 0.0);
        assert!((target_gram(&g) - DMatrix::identity(3, 3)).amax() < 1e-12);
    }
}
