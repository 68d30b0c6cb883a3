//! Random path components and far/near/hybrid channel synthesis.
//!
//! A hybrid channel with `L` paths and mixing ratio `γ` is
//!
//! ```text
//! h = √(N/L) · ( Σ_far α·a(θ) + Σ_near α·b(θ, r) )
//! ```
//!
//! `γ = 1` gives a purely far-field channel and `γ = 0` a purely near-field
//! one.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{bail, Result};
use crate::geometry::{far_steering, near_steering, ArrayConfig, NormalizedAngle};
use crate::rng::{self, complex_normal, uniform};
use crate::CVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Far,
    Near { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub angle: NormalizedAngle,
    pub field: Field,
}

impl PathComponent {
    pub fn is_far(&self) -> bool {
        matches!(self.field, Field::Far)
    }

    pub fn distance(&self) -> Option<f64> {
        match self.field {
            Field::Far => None,
            Field::Near { distance } => Some(distance),
        }
    }
}

/// Sampling ranges for path angles and near-field distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRanges {
    pub angle: (f64, f64),
    pub distance: (f64, f64),
}

impl Default for PathRanges {
    fn default() -> Self {
        Self {
            angle: (-1.0, 1.0),
            distance: (10.0, 80.0),
        }
    }
}

impl PathRanges {
    pub fn validate(&self) -> Result<()> {
        let (alo, ahi) = self.angle;
        if !(alo < ahi) || alo < -1.0 || ahi > 1.0 {
            bail!(Config, "angle range must be a non-empty subinterval of [-1, 1], got [{alo}, {ahi}]");
        }
        let (dlo, dhi) = self.distance;
        if !(dlo < dhi) || !(dlo > 0.0) || !dhi.is_finite() {
            bail!(Config, "distance range must be a non-empty positive interval, got [{dlo}, {dhi}]");
        }
        Ok(())
    }
}

/// Number of far-field paths: `round(γ·L)` with exact halves rounded up.
pub fn far_path_count(num_paths: usize, gamma: f64) -> usize {
    ((gamma * num_paths as f64) + 0.5).floor() as usize
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        bail!(Config, "mixing ratio gamma must lie in [0, 1], got {gamma}");
    }
    Ok(())
}

/// Draws `L` paths: `round(γL)` far paths followed by the near paths.
///
/// Per path the draw order is gain, angle, then distance (near paths only).
pub fn sample_paths<R: Rng + ?Sized>(
    num_paths: usize,
    gamma: f64,
    ranges: &PathRanges,
    rng: &mut R,
) -> Result<Vec<PathComponent>> {
    if num_paths == 0 {
        bail!(Config, "number of paths must be at least 1");
    }
    check_gamma(gamma)?;
    ranges.validate()?;
    let far = far_path_count(num_paths, gamma);
    let mut paths = Vec::with_capacity(num_paths);
    for l in 0..num_paths {
        let gain = complex_normal(rng);
        let angle = NormalizedAngle::new(uniform(rng, ranges.angle.0, ranges.angle.1))?;
        let field = if l < far {
            Field::Far
        } else {
            Field::Near {
                distance: uniform(rng, ranges.distance.0, ranges.distance.1),
            }
        };
        paths.push(PathComponent { gain, angle, field });
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CVector,
    pub paths: Vec<PathComponent>,
    pub gamma: f64,
}

impl ChannelRealization {
    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn num_far(&self) -> usize {
        self.paths.iter().filter(|p| p.is_far()).count()
    }
}

/// `h = √(N/L) Σ α·steering(path)` with `L = paths.len()`.
pub fn synthesize(cfg: &ArrayConfig, paths: &[PathComponent], gamma: f64) -> Result<ChannelRealization> {
    if paths.is_empty() {
        bail!(Config, "cannot synthesize a channel without paths");
    }
    check_gamma(gamma)?;
    let n = cfg.num_antennas();
    let scale = (n as f64 / paths.len() as f64).sqrt();
    let mut h = CVector::zeros(n);
    for path in paths {
        let v = match path.field {
            Field::Far => far_steering(cfg, path.angle),
            Field::Near { distance } => near_steering(cfg, path.angle, distance)?,
        };
        h.axpy(path.gain * scale, &v, Complex64::new(1.0, 0.0));
    }
    Ok(ChannelRealization {
        h,
        paths: paths.to_vec(),
        gamma,
    })
}

/// Draws and synthesizes one hybrid channel.
pub fn random_channel<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    num_paths: usize,
    gamma: f64,
    ranges: &PathRanges,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let paths = sample_paths(num_paths, gamma, ranges, rng)?;
    synthesize(cfg, &paths, gamma)
}

/// Monte Carlo mean of `‖h‖²/N`; should be close to 1.
pub fn expected_power_check(
    cfg: &ArrayConfig,
    num_paths: usize,
    gamma: f64,
    ranges: &PathRanges,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        bail!(Config, "need at least one trial");
    }
    let mut rng = rng::stream(seed, 0);
    let n = cfg.num_antennas() as f64;
    let mut acc = 0.0;
    for _ in 0..trials {
        let ch = random_channel(cfg, num_paths, gamma, ranges, &mut rng)?;
        acc += ch.h.norm_squared() / n;
    }
    Ok(acc / trials as f64)
}
