//! Hybrid-field channel modeling and compressed-sensing channel estimation
//! for extremely large-scale antenna arrays.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: uniform linear array configuration and steering vectors
//!   (planar and spherical wavefront).
//! - [`dictionary`]: angle-domain (DFT) and polar-domain transform matrices.
//! - [`channel`]: random path sampling and far/near/hybrid channel synthesis.
//! - [`measurement`]: pilot matrices and the noisy observation `y = P h + n`.
//! - [`estimators`]: OMP-based sparse estimators (far, near and hybrid field)
//!   plus least-squares and MMSE baselines.
//! - [`experiments`]: NMSE metric, Monte Carlo trials, SNR and mixing-ratio sweeps.
//! - [`config`] and [`cli`]: configuration files and the command-line driver.
//!
//! All randomness flows through [`rng`], which hands out one ChaCha20 stream
//! per trial so that serial and parallel runs are bit-identical.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod rng;

pub use num_complex::Complex64;

pub use error::{Error, Result};

/// Column vector of complex samples.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense, column-major complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
