//! Sparse-recovery channel estimators and linear baselines.
//!
//! - [`ff_omp_estimate`]: OMP over the angle-domain sensing matrix `P·F`.
//! - [`nf_omp_estimate`]: OMP over the polar-domain sensing matrix `P·W`.
//! - [`hf_omp_estimate`]: hybrid-field OMP. A first OMP stage recovers the
//!   far-field part in the angle domain; a second stage recovers the
//!   near-field part in the polar domain while keeping the angle-domain
//!   estimate fixed and subtracting it from every residual; the channel
//!   estimate is the sum `F·ĥ_A + W·ĥ_P` of the non-empty parts.
//! - [`ls_estimate`] and [`mmse_estimate`]: linear baselines.
//!
//! Cost of hybrid OMP: `O(NM(γL)³) + O(SM((1−γ)L)³) + O(NS)` for the two
//! greedy stages and the final synthesis, against `O(NML³) + O(N²)` for
//! far-field OMP and `O(SML³) + O(NS)` for near-field OMP, where `S` is the
//! polar dictionary size. The incremental QR refit used here lowers the
//! per-stage refit cost below the cubic term; the correlation sweep
//! `O(C·M)` per iteration dominates in practice.

pub(crate) mod hybrid;
mod linear;
mod omp;

use std::fmt::Write as _;
use std::time::Duration;

pub use hybrid::{ff_omp_estimate, hf_omp_estimate, nf_omp_estimate, HybridOmp, SensedDictionary, SparsityBudget};
pub use linear::{
    ls_estimate, mmse_estimate, sample_covariance, CovarianceEstimate, LeastSquares, MmseFilter,
};
pub use omp::{omp, omp_with, OmpOutcome};

use crate::dictionary::DictionaryKind;
use crate::CVector;

/// Selected column indices in selection order, without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.contains(&j)
    }

    pub(crate) fn push(&mut self, j: usize) {
        debug_assert!(!self.0.contains(&j));
        self.0.push(j);
    }
}

/// What the polar-domain refit of hybrid OMP is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefitTarget {
    /// `y − A_f·ĥ_A`: the angle-domain estimate is held fixed and the polar
    /// coefficients explain what it leaves over.
    #[default]
    Residual,
    /// The raw observation `y`.
    Observation,
}

impl RefitTarget {
    pub fn name(self) -> &'static str {
        match self {
            RefitTarget::Residual => "residual",
            RefitTarget::Observation => "observation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub coefficients: CVector,
    pub support: SupportSet,
    pub domain: DictionaryKind,
}

/// One greedy stage of an OMP-family estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub estimate: SparseEstimate,
    pub residual_norms: Vec<f64>,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub name: &'static str,
    pub h_hat: CVector,
    pub stages: Vec<StageReport>,
    pub params: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl EstimatorReport {
    pub fn rank_deficient(&self) -> bool {
        self.stages.iter().any(|s| s.rank_deficient)
    }

    /// Single-line `key=value` record for trial logs.
    pub fn to_record(&self, nmse: Option<f64>) -> String {
        let mut out = format!("estimator={}", self.name);
        for (k, v) in &self.params {
            let _ = write!(out, ";{k}={v}");
        }
        for stage in &self.stages {
            let domain = stage.estimate.domain.name();
            let support: Vec<String> = stage.estimate.support.indices().iter().map(usize::to_string).collect();
            let trace: Vec<String> = stage.residual_norms.iter().map(|r| format!("{r:e}")).collect();
            let _ = write!(out, ";support.{domain}={}", support.join(" "));
            let _ = write!(out, ";residuals.{domain}={}", trace.join(" "));
            if stage.rank_deficient {
                let _ = write!(out, ";rank_deficient.{domain}=true");
            }
        }
        if let Some(v) = nmse {
            let _ = write!(out, ";nmse={v:e}");
        }
        out
    }
}
