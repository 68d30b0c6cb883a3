//! Pilot matrices and the observation model `y = P·h + n`.
//!
//! Noise is circularly symmetric complex Gaussian with total variance `σ²`
//! per entry (`σ²/2` per real dimension), so `SNR = 1/σ²` against unit-power
//! path gains.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{bail, Result};
use crate::rng::{coin, complex_normal};
use crate::CVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotKind {
    /// I.i.d. equiprobable `±1/√M` entries.
    Random,
    /// `P = I_N`.
    Identity,
    /// Caller-supplied matrix.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    matrix: DMatrix<f64>,
    kind: PilotKind,
}

impl PilotMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.is_empty() {
            bail!(Config, "pilot matrix must not be empty");
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            bail!(Config, "pilot matrix entries must be finite");
        }
        Ok(Self {
            matrix,
            kind: PilotKind::Custom,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> PilotKind {
        self.kind
    }

    pub fn num_pilots(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.matrix.ncols()
    }

    /// `P·h` for complex `h`.
    pub fn apply(&self, h: &CVector) -> Result<CVector> {
        if h.len() != self.num_antennas() {
            bail!(
                Domain,
                "pilot matrix expects a channel of length {}, got {}",
                self.num_antennas(),
                h.len()
            );
        }
        let m = self.num_pilots();
        let mut out = CVector::zeros(m);
        for (j, hj) in h.iter().enumerate() {
            let col = self.matrix.column(j);
            for i in 0..m {
                out[i] += hj * col[i];
            }
        }
        Ok(out)
    }
}

/// `M × N` pilot matrix with i.i.d. `±1/√M` entries, drawn column-major.
pub fn random_pilots<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<PilotMatrix> {
    random_pilots_with(m, n, false, rng)
}

/// As [`random_pilots`]; `allow_oversampled` permits `M > N`.
pub fn random_pilots_with<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    allow_oversampled: bool,
    rng: &mut R,
) -> Result<PilotMatrix> {
    if m == 0 || n == 0 {
        bail!(Config, "pilot matrix dimensions must be positive, got {m}x{n}");
    }
    if m > n && !allow_oversampled {
        bail!(Config, "M = {m} pilots exceeds N = {n} antennas; oversampling must be enabled explicitly");
    }
    let amp = 1.0 / (m as f64).sqrt();
    let matrix = DMatrix::from_fn(m, n, |_, _| if coin(rng) { amp } else { -amp });
    Ok(PilotMatrix {
        matrix,
        kind: PilotKind::Random,
    })
}

pub fn identity_pilots(n: usize) -> PilotMatrix {
    PilotMatrix {
        matrix: DMatrix::identity(n, n),
        kind: PilotKind::Identity,
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub y: CVector,
    pub pilots: PilotMatrix,
    pub noise_power: f64,
    pub truth: ChannelRealization,
    /// The noise draw `y − P·h`, kept for audit.
    pub noise: CVector,
}

/// Draws `n ~ CN(0, σ²I)` and returns `y = P·h + n`.
pub fn observe<R: Rng + ?Sized>(
    pilots: &PilotMatrix,
    truth: &ChannelRealization,
    noise_power: f64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        bail!(Domain, "noise power must be finite and non-negative, got {noise_power}");
    }
    let clean = pilots.apply(&truth.h)?;
    let sigma = noise_power.sqrt();
    let noise = CVector::from_fn(clean.len(), |_, _| complex_normal(rng) * sigma);
    let y = &clean + &noise;
    Ok(MeasurementRecord {
        y,
        pilots: pilots.clone(),
        noise_power,
        truth: truth.clone(),
        noise,
    })
}

/// `σ² = 10^(−SNR_dB/10)`.
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}
