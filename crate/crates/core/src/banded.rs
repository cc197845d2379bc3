//! Symmetric positive-definite banded matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: `band[i * (b + 1) + k]` holds entry
/// (i, i − k) for k ≤ b.
#[derive(Clone, Debug)]
pub struct SymmetricBand {
    pub n: usize,
    pub b: usize,
    band: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, b: usize) -> Self {
        Self { n, b, band: vec![0.0; n * (b + 1)] }
    }

    /// Adds `v` to entry (i, j) with |i − j| ≤ b (and its mirror).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.b, "entry outside band");
        self.band[hi * (self.b + 1) + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.b {
            0.0
        } else {
            self.band[hi * (self.b + 1) + k]
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for k in 0..=self.b.min(i) {
                let v = self.band[i * (self.b + 1) + k];
                let j = i - k;
                y[i] += v * x[j];
                if k > 0 {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky factorization A = L Lᵀ.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = self.band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(b));
                for k in k0..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numerical {
                            message: "banded matrix is not positive definite".into(),
                            diagnostics: vec![format!("pivot {s:.3e} at row {i}")],
                        });
                    }
                    self.band[i * w] = s.sqrt();
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        Ok(BandCholesky { n, b, l: self.band })
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    b: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in i.saturating_sub(b)..i {
                s -= self.l[i * w + (i - j)] * y[j];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..(i + b + 1).min(n) {
                s -= self.l[j * w + (j - i)] * y[j];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}
