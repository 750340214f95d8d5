use serde::{Deserialize, Serialize};

use super::{to_spectral, RealField, SpectralField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellPower {
    pub k: usize,
    /// Mean of `|ŵ(n)|²` over the shell.
    pub shell_avg_power: f64,
    /// Sum of `|ŵ(n)|²` over the shell, the enstrophy spectrum `𝓔(k)`.
    pub shell_sum_power: f64,
    pub mode_count: usize,
}

/// Radially binned power of a field, shells `k = 1 ..= N/2 - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub shells: Vec<ShellPower>,
}

impl SpectrumEstimate {
    pub fn max_shell(&self) -> usize {
        self.shells.last().map_or(0, |s| s.k)
    }

    pub fn shell(&self, k: usize) -> Option<&ShellPower> {
        self.shells.iter().find(|s| s.k == k)
    }

    /// Shell-by-shell mean of several estimates on the same grid.
    pub fn average(estimates: &[SpectrumEstimate]) -> Result<SpectrumEstimate> {
        let first = estimates
            .first()
            .ok_or_else(|| Error::InvalidParameter("cannot average zero spectra".into()))?;
        if estimates
            .iter()
            .any(|e| e.shells.len() != first.shells.len())
        {
            return Err(Error::InvalidParameter(
                "spectra have different shell counts".into(),
            ));
        }
        let count = estimates.len() as f64;
        let shells = first
            .shells
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let sum: f64 = estimates
                    .iter()
                    .map(|e| e.shells[i].shell_sum_power)
                    .sum::<f64>()
                    / count;
                ShellPower {
                    k: s.k,
                    shell_avg_power: if s.mode_count > 0 {
                        sum / s.mode_count as f64
                    } else {
                        0.0
                    },
                    shell_sum_power: sum,
                    mode_count: s.mode_count,
                }
            })
            .collect();
        Ok(SpectrumEstimate { shells })
    }
}

/// Nearest-integer shell of the mode `n`, i.e. `k − ½ ≤ |n| < k + ½`.
fn shell_of(r2: i64) -> usize {
    // |n| is never a half-integer for integer r2, so rounding is unambiguous
    (r2 as f64).sqrt().round() as usize
}

pub fn radial_spectrum_of_coefficients(coeffs: &SpectralField) -> SpectrumEstimate {
    let grid = coeffs.grid();
    let max_shell = grid.n() / 2 - 1;
    let mut sums = vec![0.0; max_shell + 1];
    let mut counts = vec![0usize; max_shell + 1];
    for (idx, n1, n2) in grid.modes() {
        let r2 = n1 * n1 + n2 * n2;
        if r2 == 0 {
            continue;
        }
        let k = shell_of(r2);
        if k <= max_shell {
            sums[k] += coeffs.coeffs()[idx].norm_sqr();
            counts[k] += 1;
        }
    }
    let shells = (1..=max_shell)
        .map(|k| ShellPower {
            k,
            shell_avg_power: if counts[k] > 0 {
                sums[k] / counts[k] as f64
            } else {
                0.0
            },
            shell_sum_power: sums[k],
            mode_count: counts[k],
        })
        .collect();
    SpectrumEstimate { shells }
}

pub fn radial_spectrum(field: &RealField) -> SpectrumEstimate {
    radial_spectrum_of_coefficients(&to_spectral(field))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub intercept: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub r_squared: f64,
}

/// Ordinary least squares of `log power` against `log k` over
/// `k_min ..= k_max`, on shell sums (`use_sum`) or shell averages.
pub fn fit_power_law(
    spectrum: &SpectrumEstimate,
    k_min: usize,
    k_max: usize,
    use_sum: bool,
) -> Result<PowerLawFit> {
    if k_min < 2 {
        return Err(Error::DegenerateFit(format!(
            "k_min must be at least 2, got {k_min}"
        )));
    }
    if k_max > spectrum.max_shell() {
        return Err(Error::DegenerateFit(format!(
            "k_max {k_max} exceeds the largest shell {}",
            spectrum.max_shell()
        )));
    }
    let points: Vec<(f64, f64)> = spectrum
        .shells
        .iter()
        .filter(|s| s.k >= k_min && s.k <= k_max && s.mode_count > 0)
        .map(|s| {
            let p = if use_sum {
                s.shell_sum_power
            } else {
                s.shell_avg_power
            };
            if p > 0.0 {
                Ok(((s.k as f64).ln(), p.ln()))
            } else {
                Err(Error::DegenerateFit(format!("zero power in shell {}", s.k)))
            }
        })
        .collect::<Result<_>>()?;
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 shells in [{k_min}, {k_max}], got {}",
            points.len()
        )));
    }

    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (sse / (count - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        exponent_stderr: stderr,
        intercept,
        k_min,
        k_max,
        r_squared,
    })
}
