//! Spectral Gaussian-process priors for two-dimensional vorticity fields on
//! the periodic torus `[0, 2π)²`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral_field`]: grid geometry, the Fourier transform convention,
//!   Hermitian field sampling, Biot–Savart velocity recovery and radial
//!   spectrum estimation.
//! * [`kernels`]: power-law, RBF and Matérn spectral densities, grid kernel
//!   tables, Gram matrices and the velocity covariance.
//! * [`gp`]: exact GP conditioning on pointwise observations, evidence,
//!   credible intervals, energy variance and greedy sensor placement.
//! * [`experiments`]: ground-truth generators, the observation model and the
//!   reconstruction benchmark protocols.

pub mod error;
pub mod experiments;
pub mod gp;
pub mod kernels;
pub mod rng;
pub mod spectral_field;

pub use error::{Error, Result};
pub use gp::{ObservationSet, Posterior};
pub use kernels::{KernelFamily, KernelSpec, KernelTable, SpectralDensity};
pub use spectral_field::{GridSpec, RealField, SpectralField};
