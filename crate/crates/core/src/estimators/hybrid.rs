use std::time::Instant;

use num_complex::Complex64;

use super::omp::{omp_with, OmpOutcome};
use super::{EstimatorReport, RefitTarget, SparseEstimate, StageReport};
use crate::channel::{check_gamma, far_path_count};
use crate::dictionary::Dictionary;
use crate::error::{bail, Result};
use crate::measurement::PilotMatrix;
use crate::{CMatrix, CVector};

/// A dictionary paired with its sensing matrix `P·D`.
#[derive(Debug, Clone)]
pub struct SensedDictionary<'a> {
    pub dictionary: &'a Dictionary,
    pub sensing: CMatrix,
}

impl<'a> SensedDictionary<'a> {
    pub fn new(dictionary: &'a Dictionary, pilots: &PilotMatrix) -> Result<Self> {
        Ok(Self {
            dictionary,
            sensing: dictionary.sense(pilots.matrix())?,
        })
    }
}

/// Number of greedy iterations per domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityBudget {
    pub far: usize,
    pub near: usize,
}

impl SparsityBudget {
    /// `κ·L` iterations in total, `round(γ·κ·L)` of them in the angle domain
    /// (halves rounded toward the angle domain).
    pub fn split(num_paths: usize, gamma: f64, kappa: usize) -> Result<Self> {
        check_gamma(gamma)?;
        if num_paths == 0 {
            bail!(Config, "number of paths must be at least 1");
        }
        if kappa == 0 {
            bail!(Config, "sparsity multiplier kappa must be at least 1");
        }
        let total = kappa * num_paths;
        let far = far_path_count(total, gamma);
        Ok(Self { far, near: total - far })
    }

    pub fn total(&self) -> usize {
        self.far + self.near
    }
}

/// Hybrid-field OMP settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridOmp {
    pub budget: SparsityBudget,
    pub refit: RefitTarget,
}

fn stage(outcome: OmpOutcome, dict: &Dictionary) -> StageReport {
    StageReport {
        estimate: SparseEstimate {
            coefficients: outcome.coefficients,
            support: outcome.support,
            domain: dict.kind(),
        },
        residual_norms: outcome.residual_norms,
        rank_deficient: outcome.rank_deficient,
    }
}

/// `Σ_j D(:,j)·x_j` over the support, in selection order.
fn synthesize_sparse(dict: &Dictionary, est: &SparseEstimate, h: &mut CVector) {
    let m = dict.matrix();
    for &j in est.support.indices() {
        h.axpy(est.coefficients[j], &m.column(j), Complex64::new(1.0, 0.0));
    }
}

/// `A·x` restricted to the support.
fn sensed_contribution(sensing: &CMatrix, est: &SparseEstimate) -> CVector {
    let mut out = CVector::zeros(sensing.nrows());
    for &j in est.support.indices() {
        out.axpy(est.coefficients[j], &sensing.column(j), Complex64::new(1.0, 0.0));
    }
    out
}

impl HybridOmp {
    /// Runs the two greedy stages and assembles `ĥ`.
    pub fn estimate(
        &self,
        y: &CVector,
        angle: &SensedDictionary<'_>,
        polar: &SensedDictionary<'_>,
    ) -> Result<EstimatorReport> {
        self.run("hf-omp", y, angle, polar)
    }

    fn run(
        &self,
        name: &'static str,
        y: &CVector,
        angle: &SensedDictionary<'_>,
        polar: &SensedDictionary<'_>,
    ) -> Result<EstimatorReport> {
        let start = Instant::now();
        let SparsityBudget { far, near } = self.budget;
        if far == 0 && near == 0 {
            bail!(Config, "hybrid OMP needs a non-zero sparsity budget");
        }
        let mut stages = Vec::with_capacity(2);

        // Angle domain.
        let far_stage = if far > 0 {
            let out = omp_with(y, &angle.sensing, far, None, RefitTarget::Residual)?;
            Some(stage(out, angle.dictionary))
        } else {
            None
        };

        // Polar domain, with the angle-domain contribution held fixed.
        let near_stage = if near > 0 {
            let fixed = far_stage
                .as_ref()
                .map(|s| sensed_contribution(&angle.sensing, &s.estimate));
            let out = omp_with(y, &polar.sensing, near, fixed.as_ref(), self.refit)?;
            Some(stage(out, polar.dictionary))
        } else {
            None
        };

        let mut h_hat = CVector::zeros(angle.dictionary.num_rows());
        if let Some(s) = &far_stage {
            synthesize_sparse(angle.dictionary, &s.estimate, &mut h_hat);
        }
        if let Some(s) = &near_stage {
            synthesize_sparse(polar.dictionary, &s.estimate, &mut h_hat);
        }
        stages.extend(far_stage);
        stages.extend(near_stage);

        Ok(EstimatorReport {
            name,
            h_hat,
            stages,
            params: vec![
                ("k_far".into(), far.to_string()),
                ("k_near".into(), near.to_string()),
                ("refit".into(), self.refit.name().into()),
            ],
            elapsed: start.elapsed(),
        })
    }
}

fn check_square_pilots(y: &CVector, pilots: &PilotMatrix) -> Result<()> {
    if y.len() != pilots.num_pilots() {
        bail!(
            Domain,
            "observation has length {} but the pilot matrix has {} rows",
            y.len(),
            pilots.num_pilots()
        );
    }
    Ok(())
}

/// Far-field OMP: `ĥ = F·ĥ_A` with `ĥ_A = omp(y, P·F, K)`.
pub fn ff_omp_estimate(y: &CVector, pilots: &PilotMatrix, f: &Dictionary, k: usize) -> Result<EstimatorReport> {
    check_square_pilots(y, pilots)?;
    let angle = SensedDictionary::new(f, pilots)?;
    ff_omp_sensed(y, &angle, k)
}

pub(crate) fn ff_omp_sensed(y: &CVector, angle: &SensedDictionary<'_>, k: usize) -> Result<EstimatorReport> {
    if k == 0 {
        bail!(Config, "sparsity must be at least 1");
    }
    let hybrid = HybridOmp {
        budget: SparsityBudget { far: k, near: 0 },
        refit: RefitTarget::Residual,
    };
    // The polar slot is never touched when the near budget is zero.
    let mut report = hybrid.run("ff-omp", y, angle, angle)?;
    report.params = vec![("k".into(), k.to_string())];
    Ok(report)
}

/// Near-field OMP: `ĥ = W·ĥ_P` with `ĥ_P = omp(y, P·W, K)`.
pub fn nf_omp_estimate(y: &CVector, pilots: &PilotMatrix, w: &Dictionary, k: usize) -> Result<EstimatorReport> {
    check_square_pilots(y, pilots)?;
    let polar = SensedDictionary::new(w, pilots)?;
    nf_omp_sensed(y, &polar, k)
}

pub(crate) fn nf_omp_sensed(y: &CVector, polar: &SensedDictionary<'_>, k: usize) -> Result<EstimatorReport> {
    if k == 0 {
        bail!(Config, "sparsity must be at least 1");
    }
    let hybrid = HybridOmp {
        budget: SparsityBudget { far: 0, near: k },
        refit: RefitTarget::Residual,
    };
    let mut report = hybrid.run("nf-omp", y, polar, polar)?;
    report.params = vec![("k".into(), k.to_string())];
    Ok(report)
}

/// Hybrid-field OMP with budget `κ·L` split by `γ`.
#[allow(clippy::too_many_arguments)]
pub fn hf_omp_estimate(
    y: &CVector,
    pilots: &PilotMatrix,
    f: &Dictionary,
    w: &Dictionary,
    num_paths: usize,
    gamma: f64,
    kappa: usize,
    refit: RefitTarget,
) -> Result<EstimatorReport> {
    check_square_pilots(y, pilots)?;
    let hybrid = HybridOmp {
        budget: SparsityBudget::split(num_paths, gamma, kappa)?,
        refit,
    };
    let angle = SensedDictionary::new(f, pilots)?;
    let polar = SensedDictionary::new(w, pilots)?;
    hybrid.estimate(y, &angle, &polar)
}
