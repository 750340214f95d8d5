use num_complex::Complex64;

use super::{to_physical, to_spectral, GridSpec, RealField, SpectralField};
use crate::error::{Error, Result};

/// Relative size of `ŵ(0)` (against the field's coefficient norm) accepted as
/// rounding residue rather than a genuine mean.
const MEAN_MODE_TOLERANCE: f64 = 1e-12;

/// Number of low mantissa bits cleared from the stream-function coefficient so
/// that `n_i · φ` and `n_1 n_2 · φ` are exact products on this grid.
fn exact_product_bits(grid: GridSpec) -> u32 {
    let max_wavenumber = (grid.n() / 2) as u64;
    let bits = 64 - max_wavenumber.leading_zeros();
    2 * bits
}

fn truncate_mantissa(x: f64, bits: u32) -> f64 {
    f64::from_bits(x.to_bits() & !((1u64 << bits) - 1))
}

/// Velocity coefficients `û(n) = n⊥ φ(n)` with `φ(n) = -i ŵ(n)/|n|²` and
/// `n⊥ = (-n₂, n₁)`. This sign makes `∂₁u₂ − ∂₂u₁ = w`.
///
/// `φ` is rounded so that `n·û(n)` evaluates to exactly zero in floating
/// point; the rounding is below `2⁻⁴⁰` relative for `N ≤ 256`.
pub fn biot_savart_spectral(vorticity: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let grid = vorticity.grid();
    let mean = vorticity.mode(0, 0).norm();
    if mean > MEAN_MODE_TOLERANCE * vorticity.power().sqrt() {
        return Err(Error::NonzeroMeanMode(mean));
    }
    let bits = exact_product_bits(grid);
    let zero = Complex64::new(0.0, 0.0);
    let mut u1 = SpectralField::zeros(grid);
    let mut u2 = SpectralField::zeros(grid);
    for (idx, n1, n2) in grid.modes() {
        let r2 = n1 * n1 + n2 * n2;
        let half = (grid.n() / 2) as i64;
        // self-conjugate indices carry no representable velocity
        if r2 == 0 || n1 == -half || n2 == -half {
            u1.coeffs[idx] = zero;
            u2.coeffs[idx] = zero;
            continue;
        }
        let w = vorticity.coeffs[idx] / r2 as f64;
        let phi = Complex64::new(
            truncate_mantissa(w.im, bits),
            truncate_mantissa(-w.re, bits),
        );
        u1.coeffs[idx] = phi * (-n2 as f64);
        u2.coeffs[idx] = phi * (n1 as f64);
    }
    Ok((u1, u2))
}

/// Recovers the incompressible velocity `(u₁, u₂)` with `curl u = w`.
pub fn biot_savart(vorticity: &SpectralField) -> Result<(RealField, RealField)> {
    let (u1, u2) = biot_savart_spectral(vorticity)?;
    Ok((to_physical(&u1), to_physical(&u2)))
}

/// Spectral divergence `i n·û(n)` of a pair of velocity coefficient fields.
pub fn spectral_divergence(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    let grid = u1.grid();
    grid.check_same(&u2.grid())?;
    let mut out = SpectralField::zeros(grid);
    for (idx, n1, n2) in grid.modes() {
        let s = u1.coeffs[idx] * n1 as f64 + u2.coeffs[idx] * n2 as f64;
        out.coeffs[idx] = Complex64::new(-s.im, s.re);
    }
    Ok(out)
}

/// Spectral curl `∂₁u₂ − ∂₂u₁` of real velocity components. Derivatives at
/// the self-conjugate Nyquist indices are set to zero.
pub fn curl(u1: &RealField, u2: &RealField) -> Result<RealField> {
    let grid = u1.grid();
    grid.check_same(&u2.grid())?;
    let a = to_spectral(u1);
    let b = to_spectral(u2);
    let half = (grid.n() / 2) as i64;
    let mut out = SpectralField::zeros(grid);
    for (idx, n1, n2) in grid.modes() {
        if n1 == -half || n2 == -half {
            continue;
        }
        let s = b.coeffs[idx] * n1 as f64 - a.coeffs[idx] * n2 as f64;
        out.coeffs[idx] = Complex64::new(-s.im, s.re);
    }
    Ok(to_physical(&out))
}
