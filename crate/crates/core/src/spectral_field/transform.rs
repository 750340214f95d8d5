use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use super::{GridSpec, RealField, SpectralField};

/// Separable 2D transform on a row-major `N × N` buffer, unnormalized.
pub(crate) fn fft2_in_place(grid: GridSpec, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    debug_assert_eq!(data.len(), n * n);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // rows (along x₂), contiguous
    fft.process_with_scratch(data, &mut scratch);

    // columns (along x₁)
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = data[i * n + j];
        }
        fft.process_with_scratch(&mut column, &mut scratch);
        for i in 0..n {
            data[i * n + j] = column[i];
        }
    }
}

/// Fourier-series coefficients of a real grid field (`ŵ = N⁻² Σ w e^{-in·x}`).
pub fn to_spectral(field: &RealField) -> SpectralField {
    let grid = field.grid();
    let mut data: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2_in_place(grid, &mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    SpectralField { grid, coeffs: data }
}

/// Synthesises grid values from coefficients, returning the field and the
/// largest imaginary residue left by the inverse transform.
pub(crate) fn to_physical_with_residual(field: &SpectralField) -> (RealField, f64) {
    let grid = field.grid();
    let mut data = field.coeffs().to_vec();
    fft2_in_place(grid, &mut data, FftDirection::Inverse);
    let max_imag = data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    let values = data.into_iter().map(|c| c.re).collect();
    (RealField { grid, values }, max_imag)
}

/// Grid values `w(x_j) = Σ_n ŵ_n e^{in·x_j}`. Imaginary residue is discarded;
/// for Hermitian input it is at rounding level.
pub fn to_physical(field: &SpectralField) -> RealField {
    to_physical_with_residual(field).0
}

impl SpectralField {
    /// Inverse transform together with `max |Im w(x_j)|`.
    pub fn to_physical_checked(&self) -> (RealField, f64) {
        to_physical_with_residual(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_field_has_zero_coefficients() {
        let g = GridSpec::new(8).unwrap();
        let s = to_spectral(&RealField::zeros(g));
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cosine_is_a_conjugate_pair() {
        let g = GridSpec::new(16).unwrap();
        let f = RealField::from_fn(g, |x1, _| x1.cos());
        let s = to_spectral(&f);
        let mut nonzero = Vec::new();
        for (idx, n1, n2) in g.modes() {
            if s.coeffs()[idx].norm() > 1e-14 {
                nonzero.push((n1, n2));
            }
        }
        nonzero.sort();
        assert_eq!(nonzero, vec![(-1, 0), (1, 0)]);
        let a = s.mode(1, 0);
        let b = s.mode(-1, 0);
        assert!((a - b.conj()).norm() < 1e-15);
        assert!((a.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = GridSpec::new(64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = RealField::from_values(g, vals).unwrap();
        let s = to_spectral(&f);
        let (back, imag) = s.to_physical_checked();
        let rms = f.rms();
        let err = f
            .values()
            .iter()
            .zip(back.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12 * rms, "round trip error {err}");
        assert!(imag < 1e-12 * rms);
        let lhs = s.power() * g.area();
        let rhs = f.quadrature_sq();
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }
}
