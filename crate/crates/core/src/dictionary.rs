//! Angle-domain and polar-domain transform matrices.
//!
//! The angle-domain dictionary `F` is the `N × N` DFT-like matrix whose
//! column `n` is the planar steering vector at `θ_n = (2n − N − 1)/N`.
//!
//! The polar-domain dictionary `W` reuses the same angle grid and samples
//! distances on an inverse-distance grid at each angle:
//!
//! ```text
//! r_n^(s) = N²d²(1 − θ_n²) / (2λβ²) / s,   s = 1, 2, …   while r_n^(s) ≥ ρ_min
//! ```
//!
//! optionally preceded by one far-field column (`s = 0`, infinite distance)
//! per angle. Columns are stored angle-major: for each angle, the far column
//! first, then the finite distances in decreasing order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::geometry::{far_steering, near_steering, ArrayConfig, NormalizedAngle};
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DictionaryKind {
    Angle,
    Polar,
}

impl DictionaryKind {
    pub fn name(self) -> &'static str {
        match self {
            DictionaryKind::Angle => "angle",
            DictionaryKind::Polar => "polar",
        }
    }
}

/// Grid metadata of one dictionary column. `distance` is `+∞` for planar
/// (far-field) columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub angle: f64,
    pub distance: f64,
}

impl GridPoint {
    pub fn is_far(&self) -> bool {
        self.distance == f64::INFINITY
    }
}

/// Parameters of the polar-domain distance grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGridParams {
    /// Coherence control; larger values give a coarser distance grid.
    pub beta: f64,
    /// Smallest sampled distance in meters.
    pub rho_min: f64,
    /// Prepend one infinite-distance column per angle.
    pub include_far_column: bool,
}

impl Default for PolarGridParams {
    fn default() -> Self {
        Self {
            beta: 1.2,
            rho_min: 10.0,
            include_far_column: true,
        }
    }
}

/// A transform matrix with unit-norm columns and per-column grid metadata.
#[derive(Debug, Clone)]
pub struct Dictionary {
    matrix: CMatrix,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    grid: Vec<GridPoint>,
    kind: DictionaryKind,
}

impl Dictionary {
    /// Assemble a dictionary from raw parts, checking shape consistency.
    pub fn from_parts(matrix: CMatrix, grid: Vec<GridPoint>, kind: DictionaryKind) -> Result<Self> {
        if matrix.ncols() != grid.len() {
            bail!(
                Format,
                "dictionary has {} columns but {} grid points",
                matrix.ncols(),
                grid.len()
            );
        }
        let re = matrix.map(|z| z.re);
        let im = matrix.map(|z| z.im);
        Ok(Self {
            matrix,
            re,
            im,
            grid,
            kind,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_columns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Sensing matrix `P·D` for a real pilot matrix `P`.
    ///
    /// Computed as two real products so the dense kernel runs on `f64`.
    pub fn sense(&self, pilots: &DMatrix<f64>) -> Result<CMatrix> {
        if pilots.ncols() != self.num_rows() {
            bail!(
                Domain,
                "pilot matrix has {} columns, dictionary has {} rows",
                pilots.ncols(),
                self.num_rows()
            );
        }
        let re = pilots * &self.re;
        let im = pilots * &self.im;
        Ok(re.zip_map(&im, Complex64::new))
    }

    /// Synthesis `D·x`.
    pub fn synthesize(&self, coefficients: &crate::CVector) -> crate::CVector {
        &self.matrix * coefficients
    }
}

/// Unitary angle-domain dictionary.
///
/// Requires half-wavelength spacing: with any other spacing the columns on
/// the `θ_n` grid are not orthogonal.
pub fn dft_dictionary(cfg: &ArrayConfig) -> Result<Dictionary> {
    if !cfg.is_half_wavelength() {
        bail!(
            Config,
            "angle-domain dictionary needs half-wavelength spacing (d = {}, lambda/2 = {})",
            cfg.spacing(),
            cfg.wavelength() / 2.0
        );
    }
    let n = cfg.num_antennas();
    let angles = angle_grid(n);
    let mut matrix = CMatrix::zeros(n, n);
    let mut grid = Vec::with_capacity(n);
    for (j, &theta) in angles.iter().enumerate() {
        matrix.set_column(j, &far_steering(cfg, NormalizedAngle::new(theta)?));
        grid.push(GridPoint {
            angle: theta,
            distance: f64::INFINITY,
        });
    }
    Dictionary::from_parts(matrix, grid, DictionaryKind::Angle)
}

/// Angle grid `θ_n = (2n − N − 1)/N`, `n = 1..=N`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| (2.0 * k as f64 - n as f64 - 1.0) / n as f64)
        .collect()
}

/// Finite distance samples at angle `theta`, strictly decreasing.
pub fn polar_distance_samples(cfg: &ArrayConfig, params: &PolarGridParams, theta: f64) -> Vec<f64> {
    let base = first_distance_sample(cfg, params, theta);
    if !(params.rho_min > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut s = 1u32;
    loop {
        let r = base / s as f64;
        if !(r >= params.rho_min) {
            break;
        }
        out.push(r);
        s += 1;
    }
    out
}

/// `r^(1) = N²d²(1 − θ²) / (2λβ²)`.
fn first_distance_sample(cfg: &ArrayConfig, params: &PolarGridParams, theta: f64) -> f64 {
    let n = cfg.num_antennas() as f64;
    let d = cfg.spacing();
    n * n * d * d * (1.0 - theta * theta) / (2.0 * cfg.wavelength() * params.beta * params.beta)
}

/// Polar-domain dictionary on the inverse-distance grid.
pub fn polar_dictionary(cfg: &ArrayConfig, params: &PolarGridParams) -> Result<Dictionary> {
    if !(params.beta > 0.0 && params.beta.is_finite()) {
        bail!(Config, "beta must be positive and finite, got {}", params.beta);
    }
    let guard = cfg.guard_radius();
    if !(params.rho_min >= guard) || !params.rho_min.is_finite() {
        bail!(
            Config,
            "rho_min = {} m must be finite and at least the guard radius d*N = {guard} m",
            params.rho_min
        );
    }
    let n = cfg.num_antennas();
    let angles = angle_grid(n);
    let samples: Vec<Vec<f64>> = angles
        .iter()
        .map(|&theta| polar_distance_samples(cfg, params, theta))
        .collect();
    if samples.iter().all(Vec::is_empty) {
        let largest = angles
            .iter()
            .map(|&theta| first_distance_sample(cfg, params, theta))
            .fold(0.0, f64::max);
        bail!(
            Config,
            "rho_min = {} m exceeds every first distance sample r_n^(1) (largest is {largest:.3} m); the polar grid has no finite-distance columns",
            params.rho_min
        );
    }
    let far_per_angle = usize::from(params.include_far_column);
    let total: usize = samples.iter().map(|s| s.len() + far_per_angle).sum();

    let mut matrix = CMatrix::zeros(n, total);
    let mut grid = Vec::with_capacity(total);
    let mut col = 0;
    for (&theta, distances) in angles.iter().zip(&samples) {
        let angle = NormalizedAngle::new(theta)?;
        if params.include_far_column {
            matrix.set_column(col, &far_steering(cfg, angle));
            grid.push(GridPoint {
                angle: theta,
                distance: f64::INFINITY,
            });
            col += 1;
        }
        for &r in distances {
            matrix.set_column(col, &near_steering(cfg, angle, r)?);
            grid.push(GridPoint { angle: theta, distance: r });
            col += 1;
        }
    }
    Dictionary::from_parts(matrix, grid, DictionaryKind::Polar)
}

/// Summary of pairwise column coherence `|⟨c_i, c_j⟩|`, `i ≠ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub max: f64,
    /// Ten equal-width bins over `[0, 1]`; the last bin is closed.
    pub histogram: [usize; 10],
    pub pairs: usize,
}

pub fn column_coherence_report(dict: &Dictionary) -> Result<CoherenceReport> {
    let c = dict.num_columns();
    if c < 2 {
        bail!(Config, "coherence needs at least two columns, got {c}");
    }
    // Gram = (Re − jIm)ᵀ(Re + jIm)
    let rr = dict.re.tr_mul(&dict.re);
    let ii = dict.im.tr_mul(&dict.im);
    let ri = dict.re.tr_mul(&dict.im);
    let ir = dict.im.tr_mul(&dict.re);
    let mut report = CoherenceReport {
        max: 0.0,
        histogram: [0; 10],
        pairs: 0,
    };
    for j in 0..c {
        for i in 0..j {
            let g = Complex64::new(rr[(i, j)] + ii[(i, j)], ri[(i, j)] - ir[(i, j)]);
            let mag = g.norm().min(1.0);
            report.max = report.max.max(mag);
            let bin = ((mag * 10.0) as usize).min(9);
            report.histogram[bin] += 1;
            report.pairs += 1;
        }
    }
    Ok(report)
}
