//! Uniform linear array geometry and steering vectors.
//!
//! Element `n` (0-based) sits at offset `δ_n · d` from the array center, with
//! `δ_n = n − (N − 1)/2`. Both steering vectors are built from the same
//! element-path geometry:
//!
//! - planar wavefront: `a_n(θ) = exp(+j·2π·(d/λ)·δ_n·θ) / √N`
//! - spherical wavefront: `b_n(θ, r) = exp(−j·(2π/λ)·(r_n − r)) / √N`, where
//!   `r_n = sqrt(r² + δ_n²d² − 2·r·δ_n·d·θ)` is the distance from the source
//!   to element `n`.
//!
//! Since `r_n − r → −δ_n·d·θ` as `r → ∞`, the spherical vector converges to
//! the planar one exactly (no residual global phase). With half-wavelength
//! spacing the planar phase reduces to `π·δ_n·θ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::CVector;

/// Steering vector: `N` unit-modulus entries scaled by `1/√N`.
pub type SteeringVector = CVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    num_antennas: usize,
    wavelength: f64,
    spacing: f64,
}

impl ArrayConfig {
    pub fn new(num_antennas: usize, wavelength: f64, spacing: f64) -> Result<Self> {
        if num_antennas < 2 {
            bail!(Config, "array needs at least 2 antennas, got {num_antennas}");
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            bail!(Config, "wavelength must be positive and finite, got {wavelength}");
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            bail!(Config, "antenna spacing must be positive and finite, got {spacing}");
        }
        Ok(Self {
            num_antennas,
            wavelength,
            spacing,
        })
    }

    /// Array with the usual `d = λ/2` spacing.
    pub fn half_wavelength(num_antennas: usize, wavelength: f64) -> Result<Self> {
        Self::new(num_antennas, wavelength, wavelength / 2.0)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// End-to-end physical span `(N − 1)·d`.
    pub fn aperture(&self) -> f64 {
        (self.num_antennas - 1) as f64 * self.spacing
    }

    /// Far/near boundary `2D²/λ`.
    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(self)
    }

    /// Smallest source distance accepted by [`near_steering`]: `d·N`.
    pub fn guard_radius(&self) -> f64 {
        self.spacing * self.num_antennas as f64
    }

    pub fn is_half_wavelength(&self) -> bool {
        (self.spacing - self.wavelength / 2.0).abs() <= 1e-12 * self.wavelength
    }

    /// Offset `δ_n` of element `n` (0-based) in units of `d`.
    pub fn element_offset(&self, n: usize) -> f64 {
        n as f64 - (self.num_antennas as f64 - 1.0) / 2.0
    }
}

/// Normalized angle `θ ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormalizedAngle(f64);

impl NormalizedAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            bail!(Domain, "normalized angle must lie in [-1, 1], got {theta}");
        }
        Ok(Self(theta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NormalizedAngle {
    type Error = crate::Error;

    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

pub fn rayleigh_distance(cfg: &ArrayConfig) -> f64 {
    let aperture = cfg.aperture();
    2.0 * aperture * aperture / cfg.wavelength
}

/// Planar-wavefront steering vector.
pub fn far_steering(cfg: &ArrayConfig, theta: NormalizedAngle) -> SteeringVector {
    let n = cfg.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * cfg.spacing / cfg.wavelength * theta.0;
    CVector::from_iterator(
        n,
        (0..n).map(|i| Complex64::from_polar(scale, step * cfg.element_offset(i))),
    )
}

/// Spherical-wavefront steering vector for a source at distance `r` from the
/// array center.
pub fn near_steering(cfg: &ArrayConfig, theta: NormalizedAngle, r: f64) -> Result<SteeringVector> {
    if !(r > 0.0) || !r.is_finite() {
        bail!(Domain, "source distance must be positive and finite, got {r}");
    }
    let guard = cfg.guard_radius();
    if r < guard {
        bail!(
            Domain,
            "source distance {r} m is below the guard radius d*N = {guard} m"
        );
    }
    let n = cfg.num_antennas;
    let d = cfg.spacing;
    let theta = theta.0;
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * PI / cfg.wavelength;
    Ok(CVector::from_iterator(
        n,
        (0..n).map(|i| {
            let offset = cfg.element_offset(i) * d;
            let q = offset * offset - 2.0 * r * offset * theta;
            let r_n = (r * r + q).sqrt();
            // r_n - r without cancellation at large r.
            let excess = q / (r_n + r);
            Complex64::from_polar(scale, -k * excess)
        }),
    ))
}
