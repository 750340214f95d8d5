//! Periodic grid geometry and the real/spectral field representations.
//!
//! # Fourier convention
//!
//! A grid field `w(x_j)` on the `N × N` grid of `[0, 2π)²` and its coefficients
//! `ŵ_n` are related by the truncated Fourier series
//!
//! ```text
//! w(x_j) = Σ_n ŵ_n e^{i n·x_j},        ŵ_n = N⁻² Σ_j w(x_j) e^{-i n·x_j}
//! ```
//!
//! so `ŵ_n` are Fourier-series coefficients and the coefficient variance of a
//! sampled field is directly the spectral density: `Var w(x) = Σ_n E|ŵ_n|²`.
//! Parseval reads `Σ_n |ŵ_n|² = mean(w²) = quadrature(w²) / (2π)²`; the single
//! constant relating the two sides is [`GridSpec::area`].
//!
//! Arrays are row-major with index `i * N + j`, where `i` runs along `x₁` and
//! `j` along `x₂`. Spectral arrays use the standard DFT layout: index `k`
//! represents the signed wavenumber `k` for `k < N/2` and `k - N` otherwise.

mod dump;
mod sampling;
mod spectrum;
pub(crate) mod transform;
mod velocity;

pub use dump::{read_field_dump, write_field_dump, DumpHeader, DumpKind, DumpPayload};
pub use sampling::{sample_coefficients, sample_gaussian_field, ModeDensity};
pub use spectrum::{
    fit_power_law, radial_spectrum, radial_spectrum_of_coefficients, PowerLawFit, ShellPower,
    SpectrumEstimate,
};
pub use transform::{to_physical, to_spectral};
pub use velocity::{biot_savart, biot_savart_spectral, curl, spectral_divergence};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `N × N` uniform grid on the torus `[0, 2π)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub const MIN_N: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_N {
            return Err(Error::InvalidGrid(format!(
                "N must be at least {}, got {n}",
                Self::MIN_N
            )));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N must be even, got {n}")));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn domain_length(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Area element of one grid cell, `(2π/N)²`.
    pub fn quadrature_weight(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Area of the torus, `(2π)²`. Multiplies Fourier coefficients to give
    /// eigenvalues of the corresponding integral operator.
    pub fn area(&self) -> f64 {
        4.0 * PI * PI
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    /// Signed wavenumber represented by DFT index `k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// DFT index of signed wavenumber `m` (reduced modulo N).
    #[inline]
    pub fn dft_index(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// Index of the mode `-n` for the mode stored at `(k1, k2)`.
    #[inline]
    pub fn conjugate_index(&self, k1: usize, k2: usize) -> (usize, usize) {
        ((self.n - k1) % self.n, (self.n - k2) % self.n)
    }

    /// True when the lattice mode `(n1, n2)` belongs to the working truncation
    /// `0 < |n| < N/2`.
    #[inline]
    pub fn in_truncation(&self, n1: i64, n2: i64) -> bool {
        let r2 = n1 * n1 + n2 * n2;
        let half = (self.n / 2) as i64;
        r2 > 0 && r2 < half * half
    }

    /// Iterates over every grid index with its signed wave vector.
    pub fn modes(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        (0..self.len()).map(move |idx| {
            let (k1, k2) = self.unindex(idx);
            (idx, self.wavenumber(k1), self.wavenumber(k2))
        })
    }

    /// Physical coordinates of grid point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (i as f64 * h, j as f64 * h)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(())
    }
}

/// Real grid values: vorticity, stream function or a velocity component.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for N={}, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.unindex(idx);
                let (x1, x2) = grid.point(i, j);
                f(x1, x2)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance over grid points.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }

    /// Root mean square of the values (not mean-removed).
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `∫ w² dx` by the grid rectangle rule.
    pub fn quadrature_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.quadrature_weight()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Fourier coefficients of a real field in DFT layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients for N={}, got {}",
                grid.len(),
                grid.n(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the signed mode `(n1, n2)`.
    pub fn mode(&self, n1: i64, n2: i64) -> Complex64 {
        self.coeffs[self
            .grid
            .index(self.grid.dft_index(n1), self.grid.dft_index(n2))]
    }

    pub fn set_mode(&mut self, n1: i64, n2: i64, value: Complex64) {
        let idx = self
            .grid
            .index(self.grid.dft_index(n1), self.grid.dft_index(n2));
        self.coeffs[idx] = value;
    }

    /// Largest `|ŵ(-n) - conj(ŵ(n))|` over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        (0..g.len())
            .map(|idx| {
                let (k1, k2) = g.unindex(idx);
                let (c1, c2) = g.conjugate_index(k1, k2);
                (self.coeffs[g.index(c1, c2)] - self.coeffs[idx].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ_n |ŵ_n|²`.
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}
