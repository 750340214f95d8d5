//! Stationary kernels on the torus, defined through their spectral densities.
//!
//! Every family is specified by an unnormalized isotropic density `S(|n|)` on
//! the integer lattice with `S(0) = 0`:
//!
//! | family | `S(n)` |
//! |--------|--------|
//! | CHT    | `|n|^{-2(1+α)}` |
//! | RBF    | `exp(-ℓ²|n|²/2)` |
//! | Matérn | `(1 + ℓ²|n|²/(2ν))^{-(ν+1)}` |
//!
//! The density is scaled so that the kernel's marginal variance over the
//! truncation `0 < |n| < M` equals `σ²`, and the grid kernel table is its
//! inverse DFT. Periodicity and positive semi-definiteness hold exactly for
//! every family.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::spectral_field::{transform::fft2_in_place, GridSpec, ModeDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Cht,
    Rbf,
    Matern,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Cht => "cht",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Matern => "matern",
        })
    }
}

/// A kernel family with its parameters. Only the fields of the named family
/// are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub alpha: f64,
    pub length_scale: f64,
    pub nu: f64,
    pub variance: f64,
}

impl KernelSpec {
    pub fn cht(alpha: f64) -> Self {
        Self {
            family: KernelFamily::Cht,
            alpha,
            length_scale: 0.0,
            nu: 0.0,
            variance: 1.0,
        }
    }

    pub fn rbf(length_scale: f64) -> Self {
        Self {
            family: KernelFamily::Rbf,
            alpha: 0.0,
            length_scale,
            nu: 0.0,
            variance: 1.0,
        }
    }

    pub fn matern(nu: f64, length_scale: f64) -> Self {
        Self {
            family: KernelFamily::Matern,
            alpha: 0.0,
            length_scale,
            nu,
            variance: 1.0,
        }
    }

    /// Matérn with `ℓ = sqrt(2ν)`, whose density is `(1 + |n|²)^{-(ν+1)}`.
    pub fn matern_unit(nu: f64) -> Self {
        Self::matern(nu, (2.0 * nu).sqrt())
    }

    pub fn with_variance(mut self, variance: f64) -> Self {
        self.variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "variance must be > 0, got {}",
                self.variance
            )));
        }
        match self.family {
            KernelFamily::Cht if !(self.alpha > 0.0) || !self.alpha.is_finite() => Err(
                Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)),
            ),
            KernelFamily::Rbf | KernelFamily::Matern
                if !(self.length_scale > 0.0) || !self.length_scale.is_finite() =>
            {
                Err(Error::InvalidParameter(format!(
                    "length scale must be > 0, got {}",
                    self.length_scale
                )))
            }
            KernelFamily::Matern if !(self.nu > 0.0) || !self.nu.is_finite() => Err(
                Error::InvalidParameter(format!("nu must be > 0, got {}", self.nu)),
            ),
            _ => Ok(()),
        }
    }

    /// Unnormalized density at squared radius `r2 = |n|²`; zero at the origin.
    pub fn unnormalized_density(&self, r2: f64) -> f64 {
        if r2 == 0.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Cht => r2.powf(-(1.0 + self.alpha)),
            KernelFamily::Rbf => (-0.5 * self.length_scale * self.length_scale * r2).exp(),
            KernelFamily::Matern => {
                let l2 = self.length_scale * self.length_scale;
                (1.0 + l2 * r2 / (2.0 * self.nu)).powf(-(self.nu + 1.0))
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Cht => write!(f, "cht(alpha={})", self.alpha),
            KernelFamily::Rbf => write!(f, "rbf(l={})", self.length_scale),
            KernelFamily::Matern => write!(f, "matern(nu={},l={})", self.nu, self.length_scale),
        }
    }
}

/// A kernel's density normalized over the truncation `0 < |n| < radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    spec: KernelSpec,
    radius: usize,
    normalization: f64,
}

impl SpectralDensity {
    /// Normalizes `spec` over `0 < |n| < radius` so the induced kernel has
    /// `K(0) = σ²`.
    pub fn with_truncation(spec: KernelSpec, radius: usize) -> Result<Self> {
        spec.validate()?;
        if radius < 2 {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be at least 2, got {radius}"
            )));
        }
        let r = radius as i64;
        let mut total = 0.0;
        for n1 in -r + 1..r {
            for n2 in -r + 1..r {
                let r2 = n1 * n1 + n2 * n2;
                if r2 > 0 && r2 < r * r {
                    total += spec.unnormalized_density(r2 as f64);
                }
            }
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDensity(format!(
                "{spec} has total power {total} over |n| < {radius}"
            )));
        }
        Ok(Self {
            spec,
            radius,
            normalization: spec.variance / total,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    pub fn unnormalized(&self, n1: i64, n2: i64) -> f64 {
        self.spec.unnormalized_density((n1 * n1 + n2 * n2) as f64)
    }

    /// Normalized density, zero outside the truncation.
    pub fn value(&self, n1: i64, n2: i64) -> f64 {
        let r2 = n1 * n1 + n2 * n2;
        let r = self.radius as i64;
        if r2 == 0 || r2 >= r * r {
            0.0
        } else {
            self.normalization * self.spec.unnormalized_density(r2 as f64)
        }
    }
}

impl ModeDensity for SpectralDensity {
    fn mode_variance(&self, n1: i64, n2: i64) -> f64 {
        self.value(n1, n2)
    }
}

/// The family's density normalized on the working truncation of `grid`,
/// `0 < |n| < N/2`.
pub fn spectral_density(spec: KernelSpec, grid: GridSpec) -> Result<SpectralDensity> {
    SpectralDensity::with_truncation(spec, grid.n() / 2)
}

/// Kernel values at every grid offset.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    grid: GridSpec,
    spec: KernelSpec,
    values: Vec<f64>,
    coeffs: Vec<f64>,
}

/// Inverse DFT of a real, even coefficient array.
pub(crate) fn synthesize_even(grid: GridSpec, coeffs: &[f64]) -> Vec<f64> {
    let mut data: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    fft2_in_place(grid, &mut data, FftDirection::Inverse);
    let mut values: Vec<f64> = data.into_iter().map(|c| c.re).collect();
    symmetrize_dihedral(grid, &mut values);
    values
}

/// Replaces each value by the mean over its orbit under `(a,b) ↦ (±a,±b)`
/// and `(a,b) ↦ (b,a)`, so that even symmetry and on-lattice isotropy hold
/// bitwise.
fn symmetrize_dihedral(grid: GridSpec, values: &mut [f64]) {
    let n = grid.n();
    let neg = |a: usize| (n - a) % n;
    for a in 0..n {
        for b in 0..n {
            let mut orbit = [
                (a, b),
                (neg(a), b),
                (a, neg(b)),
                (neg(a), neg(b)),
                (b, a),
                (neg(b), a),
                (b, neg(a)),
                (neg(b), neg(a)),
            ]
            .map(|(x, y)| grid.index(x, y));
            orbit.sort_unstable();
            if orbit[0] != grid.index(a, b) {
                continue;
            }
            let mut members = orbit.to_vec();
            members.dedup();
            let mean = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
            for i in members {
                values[i] = mean;
            }
        }
    }
}

impl KernelTable {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn variance(&self) -> f64 {
        self.spec.variance
    }

    /// Row-major `K(a·h, b·h)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Normalized density in DFT layout.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Kernel at the grid offset `(da, db)`, reduced modulo N.
    #[inline]
    pub fn at_offset(&self, da: i64, db: i64) -> f64 {
        self.values[self
            .grid
            .index(self.grid.dft_index(da), self.grid.dft_index(db))]
    }

    /// `K(x_p − x_q)` for grid points `p`, `q`.
    #[inline]
    pub fn between(&self, p: (usize, usize), q: (usize, usize)) -> f64 {
        let n = self.grid.n();
        let da = (p.0 + n - q.0) % n;
        let db = (p.1 + n - q.1) % n;
        self.values[da * n + db]
    }

    /// Table of the kernel whose density is the `power`-th power of this
    /// one's, i.e. the `power`-fold grid convolution scaled by the area
    /// element.
    pub fn density_power_table(&self, power: i32) -> Vec<f64> {
        let coeffs: Vec<f64> = self.coeffs.iter().map(|c| c.powi(power)).collect();
        synthesize_even(self.grid, &coeffs)
    }
}

/// Evaluates the normalized density on the grid and inverse-transforms it.
pub fn build_kernel_table(spec: KernelSpec, grid: GridSpec) -> Result<KernelTable> {
    let density = spectral_density(spec, grid)?;
    let coeffs: Vec<f64> = grid
        .modes()
        .map(|(_, n1, n2)| density.value(n1, n2))
        .collect();
    if let Some(bad) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidDensity(format!(
            "{spec} evaluates to {bad} on the grid"
        )));
    }
    let values = synthesize_even(grid, &coeffs);
    Ok(KernelTable {
        grid,
        spec,
        values,
        coeffs,
    })
}

/// Brute-force `Σ_{0<|n|<M} S̃(n) cos(n·dx)` with the density normalized over
/// the same truncation. Agrees with [`build_kernel_table`] at grid offsets
/// when `M = N/2`.
pub fn direct_kernel_sum(spec: KernelSpec, dx: (f64, f64), truncation: usize) -> Result<f64> {
    let density = SpectralDensity::with_truncation(spec, truncation)?;
    let m = truncation as i64;
    let mut sum = 0.0;
    for n1 in -m + 1..m {
        for n2 in -m + 1..m {
            let s = density.value(n1, n2);
            if s != 0.0 {
                sum += s * (n1 as f64 * dx.0 + n2 as f64 * dx.1).cos();
            }
        }
    }
    Ok(sum)
}

/// Gram matrix `K(x_i − x_j) + jitter·δ_ij` for grid-index locations.
pub fn gram_matrix(
    table: &KernelTable,
    locations: &[(usize, usize)],
    jitter: f64,
) -> Result<DMatrix<f64>> {
    check_locations(table.grid(), locations)?;
    if !(jitter >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be >= 0, got {jitter}"
        )));
    }
    let m = locations.len();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        table.between(locations[i], locations[j]) + if i == j { jitter } else { 0.0 }
    }))
}

pub(crate) fn check_locations(grid: GridSpec, locations: &[(usize, usize)]) -> Result<()> {
    match locations
        .iter()
        .find(|(i, j)| *i >= grid.n() || *j >= grid.n())
    {
        Some(&(i, j)) => Err(Error::OffGrid(i as i64, j as i64)),
        None => Ok(()),
    }
}

/// Jitter ladder relative to the prior variance.
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-6;

/// Factorizes `matrix + noise·I`, adding diagonal jitter from
/// `1e-10·σ²` up to `1e-6·σ²` (×10 per step) when needed. With positive
/// noise the unjittered matrix is tried first. Returns the factor and the
/// jitter actually added.
pub fn factorize_with_jitter(
    matrix: &DMatrix<f64>,
    noise: f64,
    variance: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut attempts = Vec::new();
    if noise > 0.0 {
        attempts.push(0.0);
    }
    let mut j = JITTER_START;
    while j <= JITTER_MAX * (1.0 + 1e-9) {
        attempts.push(j * variance);
        j *= 10.0;
    }
    for jitter in attempts {
        let mut g = matrix.clone();
        for i in 0..g.nrows() {
            g[(i, i)] += noise + jitter;
        }
        if let Some(chol) = Cholesky::new(g) {
            return Ok((chol, jitter));
        }
    }
    Err(Error::Factorization {
        jitter: JITTER_MAX * variance,
    })
}

/// `(n⊥ ⊗ n⊥)/|n|^{4+2α}` with `n⊥ = (−n₂, n₁)`: the Fourier-side covariance of
/// the Biot–Savart velocity under the CHT prior.
pub fn velocity_spectral_covariance(alpha: f64, n: (i64, i64)) -> Result<[[f64; 2]; 2]> {
    let (n1, n2) = n;
    if n1 == 0 && n2 == 0 {
        return Err(Error::InvalidParameter(
            "velocity covariance is undefined at n = 0".into(),
        ));
    }
    let r2 = (n1 * n1 + n2 * n2) as f64;
    let scale = r2.powf(-(2.0 + alpha));
    let (p1, p2) = (-n2 as f64, n1 as f64);
    Ok([
        [p1 * p1 * scale, p1 * p2 * scale],
        [p2 * p1 * scale, p2 * p2 * scale],
    ])
}

/// Dissipation exponent `γ` and forcing spectral exponent `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub gamma: f64,
    pub beta: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 2.0 / 3.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gamma must lie in (2/3, 1], got {gamma}"
        )))
    }
}

/// `α = β + γ − 1`.
pub fn forcing_to_alpha(params: PhysicsParams) -> Result<f64> {
    check_gamma(params.gamma)?;
    Ok(params.beta + params.gamma - 1.0)
}

/// Whether `(α, γ)` lies in the regime with a unique invariant measure:
/// `α > 0` for `γ = 1`, `α > 2 − γ` for hypoviscous `γ ∈ (2/3, 1)`.
pub fn check_admissible(alpha: f64, gamma: f64) -> Result<bool> {
    check_gamma(gamma)?;
    Ok(if gamma == 1.0 {
        alpha > 0.0
    } else {
        alpha > 2.0 - gamma
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn all_families() -> Vec<KernelSpec> {
        vec![
            KernelSpec::cht(1.5),
            KernelSpec::cht(0.5),
            KernelSpec::rbf(0.5),
            KernelSpec::matern_unit(1.5),
            KernelSpec::matern(0.5, 0.3).with_variance(2.0),
        ]
    }

    #[test]
    fn cht_density_values() {
        let s = KernelSpec::cht(1.5);
        assert_eq!(s.unnormalized_density(1.0), 1.0);
        assert!((s.unnormalized_density(4.0) - 0.03125).abs() < 1e-16);
        assert_eq!(s.unnormalized_density(0.0), 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(KernelSpec::cht(0.0).validate().is_err());
        assert!(KernelSpec::cht(-1.0).validate().is_err());
        assert!(KernelSpec::rbf(0.0).validate().is_err());
        assert!(KernelSpec::matern(0.0, 1.0).validate().is_err());
        assert!(KernelSpec::matern(1.0, -1.0).validate().is_err());
        assert!(KernelSpec::cht(1.0).with_variance(0.0).validate().is_err());
    }

    #[test]
    fn normalization_sums_to_variance() {
        let g = GridSpec::new(32).unwrap();
        for spec in all_families() {
            let d = spectral_density(spec, g).unwrap();
            let total: f64 = g.modes().map(|(_, a, b)| d.value(a, b)).sum();
            assert!((total - spec.variance).abs() < 1e-12 * spec.variance);
        }
    }

    #[test]
    fn table_origin_symmetry_and_isotropy() {
        let g = GridSpec::new(16).unwrap();
        for spec in all_families() {
            let t = build_kernel_table(spec, g).unwrap();
            assert!((t.at_offset(0, 0) - spec.variance).abs() < 1e-12 * spec.variance);
            for a in 0..16i64 {
                for b in 0..16i64 {
                    assert_eq!(t.at_offset(a, b), t.at_offset(-a, -b));
                    assert_eq!(t.at_offset(a, b), t.at_offset(b, a));
                }
            }
        }
    }

    #[test]
    fn table_matches_direct_sum() {
        for &n in &[8usize, 16] {
            let g = GridSpec::new(n).unwrap();
            for spec in all_families() {
                let t = build_kernel_table(spec, g).unwrap();
                for a in 0..n {
                    for b in 0..n {
                        let (x1, x2) = g.point(a, b);
                        let direct = direct_kernel_sum(spec, (x1, x2), n / 2).unwrap();
                        let tv = t.at_offset(a as i64, b as i64);
                        assert!(
                            (tv - direct).abs() <= 1e-10 * spec.variance,
                            "{spec} N={n} ({a},{b}): {tv} vs {direct}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn direct_sum_examples() {
        let spec = KernelSpec::cht(1.5);
        assert!((direct_kernel_sum(spec, (0.0, 0.0), 8).unwrap() - 1.0).abs() < 1e-14);
        let t = build_kernel_table(spec, GridSpec::new(16).unwrap()).unwrap();
        let corner = direct_kernel_sum(spec, (PI, PI), 8).unwrap();
        assert!((corner - t.at_offset(8, 8)).abs() < 1e-10);
        for dx in [(0.3, -1.2), (2.0, 0.7)] {
            assert_eq!(
                direct_kernel_sum(spec, dx, 6).unwrap(),
                direct_kernel_sum(spec, (-dx.0, -dx.1), 6).unwrap()
            );
        }
    }

    #[test]
    fn matern_tail_tracks_cht() {
        let cht = KernelSpec::cht(1.5);
        let mat = KernelSpec::matern_unit(1.5);
        let amp = cht.unnormalized_density(256.0) / mat.unnormalized_density(256.0);
        let ratio = amp * mat.unnormalized_density(1024.0) / cht.unnormalized_density(1024.0);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn rbf_cutoff_versus_power_law() {
        let cht = KernelSpec::cht(1.0);
        let rbf = KernelSpec::rbf(0.5);
        let amp = cht.unnormalized_density(4.0) / rbf.unnormalized_density(4.0);
        let ratio = cht.unnormalized_density(1024.0) / (amp * rbf.unnormalized_density(1024.0));
        assert!(ratio >= 1e3, "ratio {ratio}");
    }

    #[test]
    fn gram_matrix_edge_cases() {
        let g = GridSpec::new(16).unwrap();
        let t = build_kernel_table(KernelSpec::cht(1.5), g).unwrap();
        let single = gram_matrix(&t, &[(3, 4)], 0.25).unwrap();
        assert_eq!(single.shape(), (1, 1));
        assert!((single[(0, 0)] - 1.25).abs() < 1e-12);
        let dup = gram_matrix(&t, &[(3, 4), (3, 4)], 0.0).unwrap();
        assert!(dup.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(dup.clone().symmetric_eigenvalues().min().abs() < 1e-12);
        assert!(matches!(
            gram_matrix(&t, &[(16, 0)], 0.0),
            Err(Error::OffGrid(16, 0))
        ));
        // coincident points factorize once noise or jitter is added
        assert!(factorize_with_jitter(&dup, 0.0, 1.0).is_ok());
        assert!(factorize_with_jitter(&dup, 1e-3, 1.0).unwrap().1 == 0.0);
    }

    #[test]
    fn velocity_covariance_cases() {
        assert_eq!(
            velocity_spectral_covariance(1.5, (1, 0)).unwrap(),
            [[0.0, 0.0], [0.0, 1.0]]
        );
        assert_eq!(
            velocity_spectral_covariance(1.5, (0, 1)).unwrap(),
            [[1.0, 0.0], [0.0, 0.0]]
        );
        assert!(velocity_spectral_covariance(1.5, (0, 0)).is_err());
        for n in [(2i64, 3i64), (-5, 1), (4, -4)] {
            let m = velocity_spectral_covariance(1.2, n).unwrap();
            let (a, b) = (n.0 as f64, n.1 as f64);
            assert!((m[0][0] * a + m[0][1] * b).abs() < 1e-15);
            assert!((m[1][0] * a + m[1][1] * b).abs() < 1e-15);
            let r2 = a * a + b * b;
            assert!((m[0][0] + m[1][1] - r2.powf(-(1.0 + 1.2))).abs() < 1e-14);
            assert_eq!(m[0][1], m[1][0]);
            assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() < 1e-15);
        }
    }

    #[test]
    fn admissibility_examples() {
        let alpha = forcing_to_alpha(PhysicsParams {
            gamma: 1.0,
            beta: 1.5,
        })
        .unwrap();
        assert_eq!(alpha, 1.5);
        assert!(check_admissible(alpha, 1.0).unwrap());
        assert!(!check_admissible(1.1, 0.8).unwrap());
        assert!(check_admissible(1.3, 0.8).unwrap());
        assert!(check_admissible(1.0, 0.6).is_err());
        assert!(check_admissible(1.0, 1.1).is_err());
        assert!(forcing_to_alpha(PhysicsParams {
            gamma: 0.5,
            beta: 1.0
        })
        .is_err());
    }
}
