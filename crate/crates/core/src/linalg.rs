//! Least-squares kernels for support refits.
//!
//! [`IncrementalQr`] grows a thin QR factorization one column at a time using
//! classical Gram–Schmidt with one reorthogonalization pass, which keeps `Q`
//! orthonormal to working precision. A column whose orthogonal remainder is
//! below `RANK_TOL` times its norm is reported as dependent; callers then
//! fall back to [`lstsq_min_norm`].

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::{CMatrix, CVector};

/// Relative threshold for declaring a new column linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IncrementalQr {
    rows: usize,
    /// Orthonormal columns, stored back to back.
    q: Vec<Complex64>,
    /// Upper-triangular factor, column `k` holds `k + 1` entries.
    r: Vec<Vec<Complex64>>,
}

impl IncrementalQr {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.r.len()
    }

    fn q_col(&self, k: usize) -> &[Complex64] {
        &self.q[k * self.rows..(k + 1) * self.rows]
    }

    /// Appends a column. Returns `false` (and leaves the factorization
    /// unchanged) when the column is numerically in the span of the
    /// existing ones.
    pub fn push(&mut self, column: &[Complex64]) -> bool {
        assert_eq!(column.len(), self.rows);
        let k = self.rank();
        let col_norm = norm(column);
        let mut v = column.to_vec();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        for _ in 0..2 {
            for (j, c) in coeffs.iter_mut().take(k).enumerate() {
                let qj = self.q_col(j);
                let proj = dotc(qj, &v);
                for (vi, qi) in v.iter_mut().zip(qj) {
                    *vi -= qi * proj;
                }
                *c += proj;
            }
        }
        let rem = norm(&v);
        if !(rem > RANK_TOL * col_norm) {
            return false;
        }
        let inv = 1.0 / rem;
        self.q.extend(v.iter().map(|z| z * inv));
        coeffs[k] = Complex64::new(rem, 0.0);
        self.r.push(coeffs);
        true
    }

    /// `Qᴴ·b` restricted to column `k`.
    pub fn project(&self, k: usize, b: &[Complex64]) -> Complex64 {
        dotc(self.q_col(k), b)
    }

    /// Solves `R·x = z` for the current factor.
    pub fn back_substitute(&self, z: &[Complex64]) -> Vec<Complex64> {
        let k = self.rank();
        assert_eq!(z.len(), k);
        let mut x = z.to_vec();
        for i in (0..k).rev() {
            let mut acc = x[i];
            for (j, xj) in x.iter().enumerate().take(k).skip(i + 1) {
                acc -= self.r[j][i] * xj;
            }
            x[i] = acc / self.r[i][i];
        }
        x
    }

    /// Least-squares coefficients for right-hand side `b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let z: Vec<Complex64> = (0..self.rank()).map(|k| self.project(k, b)).collect();
        self.back_substitute(&z)
    }
}

/// Minimum-norm least-squares solution of `A·x ≈ b` via the SVD.
pub fn lstsq_min_norm(a: &CMatrix, b: &CVector) -> Result<CVector> {
    if a.nrows() != b.len() {
        bail!(Domain, "system has {} rows but right-hand side has {}", a.nrows(), b.len());
    }
    if a.ncols() == 0 {
        return Ok(CVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * RANK_TOL;
    svd.solve(b, eps).map_err(|e| crate::Error::Numerical(e.to_string()))
}

pub(crate) fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
