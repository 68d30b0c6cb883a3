//! Orthogonal matching pursuit with least-squares refits.
//!
//! Each iteration selects the not-yet-selected column with the largest
//! squared correlation `|⟨A(:,j), r⟩|²` (lowest index wins ties), refits every
//! selected coefficient by least squares and recomputes the residual from
//! scratch.
//!
//! The optional `fixed` term is the measurement-space contribution of an
//! estimate produced earlier (the angle-domain stage of hybrid OMP). It is
//! subtracted in every residual update, `r = y − A·x − fixed`.

use num_complex::Complex64;

use super::{RefitTarget, SupportSet};
use crate::error::{bail, Result};
use crate::linalg::{dotc, lstsq_min_norm, IncrementalQr};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub struct OmpOutcome {
    /// Full-length coefficient vector; zero off the support.
    pub coefficients: CVector,
    pub support: SupportSet,
    pub residual: CVector,
    /// `‖r‖` before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
    /// A selected column was numerically dependent on earlier ones and the
    /// refit fell back to the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Plain OMP: `k` iterations on `y ≈ A·x`.
pub fn omp(y: &CVector, a: &CMatrix, k: usize) -> Result<OmpOutcome> {
    omp_with(y, a, k, None, RefitTarget::Residual)
}

/// OMP with an optional fixed contribution already explained by another
/// estimate. With [`RefitTarget::Residual`] the coefficients are fitted to
/// `y − fixed`; with [`RefitTarget::Observation`] they are fitted to `y`.
pub fn omp_with(
    y: &CVector,
    a: &CMatrix,
    k: usize,
    fixed: Option<&CVector>,
    refit: RefitTarget,
) -> Result<OmpOutcome> {
    let (m, c) = a.shape();
    if k == 0 {
        bail!(Config, "sparsity must be at least 1");
    }
    if k > c {
        bail!(Config, "sparsity {k} exceeds the {c} available columns");
    }
    if y.len() != m {
        bail!(Domain, "observation has length {} but sensing matrix has {m} rows", y.len());
    }
    if let Some(f) = fixed {
        if f.len() != m {
            bail!(Domain, "fixed contribution has length {} but sensing matrix has {m} rows", f.len());
        }
    }

    let target = match (fixed, refit) {
        (Some(f), RefitTarget::Residual) => y - f,
        _ => y.clone(),
    };
    let mut residual = match fixed {
        Some(f) => y - f,
        None => y.clone(),
    };
    let data = a.as_slice();
    let column = |j: usize| &data[j * m..(j + 1) * m];

    let mut selected = vec![false; c];
    let mut support = SupportSet::default();
    let mut qr = IncrementalQr::new(m);
    let mut projections: Vec<Complex64> = Vec::with_capacity(k);
    let mut rank_deficient = false;
    let mut coeffs: Vec<Complex64> = Vec::new();
    let mut residual_norms = Vec::with_capacity(k + 1);
    residual_norms.push(residual.norm());

    for _ in 0..k {
        let r = residual.as_slice();
        let mut best = usize::MAX;
        let mut best_corr = -1.0;
        for (j, taken) in selected.iter().enumerate() {
            if *taken {
                continue;
            }
            let corr = dotc(column(j), r).norm_sqr();
            if corr > best_corr {
                best_corr = corr;
                best = j;
            }
        }
        selected[best] = true;
        support.push(best);

        if !rank_deficient && qr.push(column(best)) {
            projections.push(qr.project(qr.rank() - 1, target.as_slice()));
            coeffs = qr.back_substitute(&projections);
        } else {
            rank_deficient = true;
            let sub = CMatrix::from_fn(m, support.len(), |i, s| column(support.indices()[s])[i]);
            coeffs = lstsq_min_norm(&sub, &target)?.as_slice().to_vec();
        }

        residual = y.clone();
        for (&j, &x) in support.indices().iter().zip(&coeffs) {
            for (ri, aij) in residual.iter_mut().zip(column(j)) {
                *ri -= aij * x;
            }
        }
        if let Some(f) = fixed {
            residual -= f;
        }
        residual_norms.push(residual.norm());
    }

    let mut coefficients = CVector::zeros(c);
    for (&j, &x) in support.indices().iter().zip(&coeffs) {
        coefficients[j] = x;
    }
    Ok(OmpOutcome {
        coefficients,
        support,
        residual,
        residual_norms,
        rank_deficient,
    })
}
