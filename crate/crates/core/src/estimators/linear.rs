//! Linear baselines: minimum-norm least squares and LMMSE.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{random_channel, PathRanges};
use crate::error::{bail, Result};
use crate::geometry::ArrayConfig;
use crate::measurement::{PilotKind, PilotMatrix};
use crate::rng::{self, TRAINING_STREAM};
use crate::{CMatrix, CVector};

fn real_times_complex(a: &DMatrix<f64>, y: &CVector) -> CVector {
    let re = a * y.map(|z| z.re);
    let im = a * y.map(|z| z.im);
    re.zip_map(&im, Complex64::new)
}

/// Minimum-norm least-squares solver for a fixed pilot matrix: `ĥ = P⁺·y`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pinv: DMatrix<f64>,
}

impl LeastSquares {
    pub fn new(pilots: &PilotMatrix) -> Result<Self> {
        let pinv = match pilots.kind() {
            PilotKind::Identity => pilots.matrix().clone(),
            PilotKind::Random | PilotKind::Custom => {
                let p = pilots.matrix();
                let svd = p.clone().svd(true, true);
                let eps = svd.singular_values.max() * crate::linalg::RANK_TOL;
                svd.pseudo_inverse(eps)
                    .map_err(|e| crate::Error::Numerical(e.to_string()))?
            }
        };
        Ok(Self { pinv })
    }

    pub fn apply(&self, y: &CVector) -> Result<CVector> {
        if y.len() != self.pinv.ncols() {
            bail!(Domain, "observation has length {}, expected {}", y.len(), self.pinv.ncols());
        }
        Ok(real_times_complex(&self.pinv, y))
    }
}

pub fn ls_estimate(y: &CVector, pilots: &PilotMatrix) -> Result<CVector> {
    LeastSquares::new(pilots)?.apply(y)
}

/// LMMSE filter `G = R·Pᴴ·(P·R·Pᴴ + σ²I)⁻¹`, built once and applied to many
/// observations.
#[derive(Debug, Clone)]
pub struct MmseFilter {
    gain: CMatrix,
}

impl MmseFilter {
    pub fn new(covariance: &CMatrix, pilots: &PilotMatrix, noise_power: f64) -> Result<Self> {
        let n = pilots.num_antennas();
        if covariance.shape() != (n, n) {
            bail!(
                Domain,
                "covariance is {:?} but the pilot matrix has {n} columns",
                covariance.shape()
            );
        }
        if !(noise_power >= 0.0) {
            bail!(Domain, "noise power must be non-negative, got {noise_power}");
        }
        let (pr, mut s) = match pilots.kind() {
            PilotKind::Identity => (covariance.clone(), covariance.clone()),
            PilotKind::Random | PilotKind::Custom => {
                let p = pilots.matrix().map(|x| Complex64::new(x, 0.0));
                let pr = &p * covariance;
                let s = &pr * p.adjoint();
                (pr, s)
            }
        };
        for i in 0..s.nrows() {
            s[(i, i)] += Complex64::new(noise_power, 0.0);
        }
        // S is Hermitian, so (S⁻¹·P·R)ᴴ = R·Pᴴ·S⁻¹.
        let chol = s.cholesky().ok_or_else(|| {
            crate::Error::Numerical(format!(
                "P R P^H + sigma^2 I is not positive definite (sigma^2 = {noise_power}); use a positive noise-power floor"
            ))
        })?;
        let x = chol.solve(&pr);
        Ok(Self { gain: x.adjoint() })
    }

    pub fn gain(&self) -> &CMatrix {
        &self.gain
    }

    pub fn apply(&self, y: &CVector) -> Result<CVector> {
        if y.len() != self.gain.ncols() {
            bail!(Domain, "observation has length {}, expected {}", y.len(), self.gain.ncols());
        }
        Ok(&self.gain * y)
    }
}

pub fn mmse_estimate(y: &CVector, pilots: &PilotMatrix, covariance: &CMatrix, noise_power: f64) -> Result<CVector> {
    MmseFilter::new(covariance, pilots, noise_power)?.apply(y)
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: CMatrix,
    pub samples: usize,
}

impl CovarianceEstimate {
    /// Fewer training channels than antennas: the estimate is singular.
    pub fn rank_limited(&self) -> bool {
        self.samples < self.matrix.nrows()
    }
}

/// `R = (1/K)·Σ h_k·h_kᴴ` over `K` hybrid channels drawn from the reserved
/// training stream of `seed`.
pub fn sample_covariance(
    cfg: &ArrayConfig,
    num_paths: usize,
    gamma: f64,
    ranges: &PathRanges,
    samples: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if samples == 0 {
        bail!(Config, "covariance needs at least one training channel");
    }
    let n = cfg.num_antennas();
    let mut rng = rng::stream(seed, TRAINING_STREAM);
    let mut hr = DMatrix::<f64>::zeros(n, samples);
    let mut hi = DMatrix::<f64>::zeros(n, samples);
    for k in 0..samples {
        let ch = random_channel(cfg, num_paths, gamma, ranges, &mut rng)?;
        for (i, z) in ch.h.iter().enumerate() {
            hr[(k * n) + i] = z.re;
            hi[(k * n) + i] = z.im;
        }
    }
    // H·Hᴴ = (HrHrᵀ + HiHiᵀ) + j(HiHrᵀ − HrHiᵀ)
    let re = &hr * hr.transpose() + &hi * hi.transpose();
    let im = &hi * hr.transpose() - &hr * hi.transpose();
    let inv = 1.0 / samples as f64;
    let mut matrix = re.zip_map(&im, |a, b| Complex64::new(a * inv, b * inv));
    // Exact Hermitian symmetry.
    for j in 0..n {
        matrix[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5;
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg.conj();
        }
    }
    Ok(CovarianceEstimate { matrix, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{identity_pilots, random_pilots};
    use crate::rng::{complex_normal, stream};

    fn vec(n: usize, seed: u64) -> CVector {
        let mut rng = stream(seed, 0);
        CVector::from_fn(n, |_, _| complex_normal(&mut rng))
    }

    #[test]
    fn ls_identity_is_passthrough() {
        let y = vec(8, 1);
        assert_eq!(ls_estimate(&y, &identity_pilots(8)).unwrap(), y);
    }

    #[test]
    fn ls_underdetermined_fits_exactly() {
        let p = random_pilots(6, 16, &mut stream(2, 0)).unwrap();
        let h = vec(16, 3);
        let y = p.apply(&h).unwrap();
        let est = ls_estimate(&y, &p).unwrap();
        assert!((p.apply(&est).unwrap() - &y).camax() < 1e-10);
        assert!((est - h).camax() > 1e-3);
    }

    #[test]
    fn ls_row_orthonormal_is_transpose() {
        // Rows of a 4x4 Hadamard matrix scaled by 1/2 are orthonormal.
        let had = [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0]];
        let p = DMatrix::from_fn(3, 4, |i, j| had[i][j] * 0.5);
        let pm = PilotMatrix::from_matrix(p.clone()).unwrap();
        let y = vec(3, 4);
        let est = ls_estimate(&y, &pm).unwrap();
        let expected = real_times_complex(&p.transpose(), &y);
        assert!((est - expected).camax() < 1e-12);
    }

    #[test]
    fn mmse_scalar_shrinkage() {
        let y = vec(6, 5);
        let r = CMatrix::identity(6, 6);
        let est = mmse_estimate(&y, &identity_pilots(6), &r, 0.25).unwrap();
        assert!((est - &y / Complex64::new(1.25, 0.0)).camax() < 1e-14);
    }

    #[test]
    fn mmse_noiseless_limit() {
        let y = vec(5, 6);
        let a = CMatrix::from_fn(5, 5, |i, j| vec(25, 7)[i * 5 + j]);
        let r = &a * a.adjoint() + CMatrix::identity(5, 5);
        let est = mmse_estimate(&y, &identity_pilots(5), &r, 1e-12).unwrap();
        assert!((est - &y).camax() < 1e-9);
    }

    #[test]
    fn mmse_singular_system_is_reported() {
        let r = CMatrix::zeros(4, 4);
        let err = mmse_estimate(&vec(4, 8), &identity_pilots(4), &r, 0.0).unwrap_err();
        assert!(matches!(err, crate::Error::Numerical(_)));
        assert!(err.to_string().contains("noise-power floor"));
    }

    #[test]
    fn mmse_random_pilots_matches_direct_formula() {
        let p = random_pilots(4, 6, &mut stream(9, 0)).unwrap();
        let a = CMatrix::from_fn(6, 6, |i, j| vec(36, 10)[i * 6 + j]);
        let r = &a * a.adjoint();
        let y = vec(4, 11);
        let est = mmse_estimate(&y, &p, &r, 0.3).unwrap();
        let pc = p.matrix().map(|x| Complex64::new(x, 0.0));
        let s = &pc * &r * pc.adjoint() + CMatrix::identity(4, 4) * Complex64::new(0.3, 0.0);
        let direct = &r * pc.adjoint() * s.try_inverse().unwrap() * &y;
        assert!((est - direct).camax() < 1e-10);
    }

    #[test]
    fn covariance_properties() {
        let c = ArrayConfig::half_wavelength(16, 0.01).unwrap();
        let ranges = PathRanges { distance: (1.0, 5.0), ..Default::default() };
        let est = sample_covariance(&c, 6, 0.5, &ranges, 160, 3).unwrap();
        let m = &est.matrix;
        assert_eq!(m, &m.adjoint());
        let trace: f64 = (0..16).map(|i| m[(i, i)].re).sum();
        assert!((trace / 16.0 - 1.0).abs() < 0.1, "{trace}");
        assert!(!est.rank_limited());

        let one = sample_covariance(&c, 6, 0.5, &ranges, 1, 3).unwrap();
        assert!(one.rank_limited());
        let svals = one.matrix.clone().singular_values();
        assert!(svals.iter().filter(|&&s| s > 1e-9 * svals.max()).count() == 1);
    }
}
