//! Reconstruction benchmarks: ground-truth generation, the observation model,
//! per-trial error metrics and the sweep protocols.
//!
//! A trial is a pure function of its `u64` seed. Truth, observation locations
//! and noise draw from separate streams derived with [`derive_seed`], and
//! sweeps derive trial seeds from the master seed and the trial index, so
//! parallel and serial runs give bit-identical results.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gp::{posterior_mean, select_table, ObservationSet};
use crate::kernels::{build_kernel_table, spectral_density, KernelFamily, KernelSpec, KernelTable};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::spectral_field::{
    fit_power_law, radial_spectrum, sample_gaussian_field, GridSpec, PowerLawFit, RealField,
    SpectrumEstimate,
};

/// RBF length scales (radians) searched by evidence maximization.
pub const DEFAULT_RBF_LENGTH_SCALES: [f64; 11] =
    [0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.2, 1.6];

/// A unit-variance ground truth and the factor applied to reach unit variance.
#[derive(Debug, Clone)]
pub struct Truth {
    pub field: RealField,
    pub scale: f64,
}

fn normalize_unit_variance(mut field: RealField) -> Result<Truth> {
    let mean = field.mean();
    field.values_mut().iter_mut().for_each(|v| *v -= mean);
    let var = field.variance();
    if !(var > 0.0) {
        return Err(Error::InvalidParameter(
            "cannot normalize a constant field".into(),
        ));
    }
    let scale = 1.0 / var.sqrt();
    field.scale(scale);
    Ok(Truth { field, scale })
}

/// Sample of the power-law Gaussian measure, rescaled to unit grid variance.
pub fn generate_cht_truth(alpha: f64, grid: GridSpec, seed: u64) -> Result<Truth> {
    let density = spectral_density(KernelSpec::cht(alpha), grid)?;
    normalize_unit_variance(sample_gaussian_field(&density, grid, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexParams {
    pub vortex_count: usize,
    pub radius_range: (f64, f64),
    pub amplitude_range: (f64, f64),
    /// Probability that a vortex is positive.
    pub sign_balance: f64,
}

impl Default for VortexParams {
    fn default() -> Self {
        Self {
            vortex_count: 12,
            radius_range: (0.2, 0.6),
            amplitude_range: (0.5, 1.5),
            sign_balance: 0.5,
        }
    }
}

impl VortexParams {
    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = self.radius_range;
        let (a0, a1) = self.amplitude_range;
        if self.vortex_count == 0 {
            return Err(Error::InvalidParameter(
                "vortex count must be at least 1".into(),
            ));
        }
        if !(r0 > 0.0 && r0 <= r1 && r1 < PI) {
            return Err(Error::InvalidParameter(format!(
                "radius range ({r0}, {r1}) must lie in (0, π)"
            )));
        }
        if !(a0 > 0.0 && a0 <= a1) {
            return Err(Error::InvalidParameter(format!(
                "amplitude range ({a0}, {a1}) is invalid"
            )));
        }
        if !(0.0..=1.0).contains(&self.sign_balance) {
            return Err(Error::InvalidParameter(format!(
                "sign balance {} outside [0, 1]",
                self.sign_balance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub center: (f64, f64),
    pub radius: f64,
    pub amplitude: f64,
}

fn torus_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// `Σ_j A_j exp(−d_T(x, c_j)² / (2 r_j²))` with torus distance `d_T`.
pub fn superpose_vortices(grid: GridSpec, vortices: &[Vortex]) -> RealField {
    RealField::from_fn(grid, |x1, x2| {
        vortices
            .iter()
            .map(|v| {
                let d1 = torus_delta(x1, v.center.0);
                let d2 = torus_delta(x2, v.center.1);
                v.amplitude * (-(d1 * d1 + d2 * d2) / (2.0 * v.radius * v.radius)).exp()
            })
            .sum()
    })
}

pub fn draw_vortices(params: &VortexParams, seed: u64) -> Result<Vec<Vortex>> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok((0..params.vortex_count)
        .map(|_| {
            let center = (
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            );
            let radius = rng.random_range(params.radius_range.0..=params.radius_range.1);
            let magnitude = rng.random_range(params.amplitude_range.0..=params.amplitude_range.1);
            let sign = if rng.random_bool(params.sign_balance) {
                1.0
            } else {
                -1.0
            };
            Vortex {
                center,
                radius,
                amplitude: sign * magnitude,
            }
        })
        .collect())
}

/// Random Gaussian-blob vortex field, mean-removed and unit-variance.
pub fn generate_vortex_truth(params: &VortexParams, grid: GridSpec, seed: u64) -> Result<Truth> {
    let vortices = draw_vortices(params, seed)?;
    normalize_unit_variance(superpose_vortices(grid, &vortices))
}

/// `m` distinct grid points with values `truth + ε`, `ε ~ N(0, (ratio·rms)²)`.
pub fn observe(truth: &RealField, m: usize, noise_ratio: f64, seed: u64) -> Result<ObservationSet> {
    let grid = truth.grid();
    if m == 0 || m > grid.len() {
        return Err(Error::InvalidParameter(format!(
            "observation count must be in [1, {}], got {m}",
            grid.len()
        )));
    }
    if !(noise_ratio >= 0.0) || !noise_ratio.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise ratio must be >= 0, got {noise_ratio}"
        )));
    }
    let sigma = noise_ratio * truth.rms();
    let mut loc_rng = rng_from_seed(derive_seed(seed, &[stream::LOCATIONS]));
    let mut noise_rng = rng_from_seed(derive_seed(seed, &[stream::NOISE]));
    let picks = sample_indices(&mut loc_rng, grid.len(), m);
    let mut locations = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for idx in picks.iter() {
        let loc = grid.unindex(idx);
        let noise: f64 = if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            sigma * z
        } else {
            0.0
        };
        locations.push(loc);
        values.push(truth.values()[idx] + noise);
    }
    ObservationSet::new(locations, values, sigma * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    GaussianCht,
    Vortex,
}

/// A reconstruction prior: one kernel, or several with the evidence-maximizing
/// one chosen per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub label: String,
    pub candidates: Vec<KernelSpec>,
}

impl Prior {
    pub fn fixed(label: impl Into<String>, spec: KernelSpec) -> Self {
        Self {
            label: label.into(),
            candidates: vec![spec],
        }
    }

    pub fn tuned(label: impl Into<String>, candidates: Vec<KernelSpec>) -> Self {
        Self {
            label: label.into(),
            candidates,
        }
    }

    pub fn cht(alpha: f64) -> Self {
        Self::fixed("cht", KernelSpec::cht(alpha))
    }

    /// RBF with `ℓ` chosen from [`DEFAULT_RBF_LENGTH_SCALES`].
    pub fn tuned_rbf() -> Self {
        Self::tuned(
            "rbf",
            DEFAULT_RBF_LENGTH_SCALES
                .iter()
                .map(|&l| KernelSpec::rbf(l))
                .collect(),
        )
    }
}

/// One benchmark configuration. `priors[0]` is the subject prior and
/// `priors[1]` the reference it is compared against; further priors are
/// reported but do not enter the improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub grid_n: usize,
    pub alpha_true: f64,
    pub priors: Vec<Prior>,
    pub m: usize,
    pub noise_ratio: f64,
    pub master_seed: u64,
    pub truth_kind: TruthKind,
    pub vortex: VortexParams,
}

impl TrialConfig {
    /// Power-law truth with `alpha_true`, matched CHT prior against tuned RBF.
    pub fn gaussian(
        grid_n: usize,
        alpha_true: f64,
        m: usize,
        noise_ratio: f64,
        master_seed: u64,
    ) -> Self {
        Self {
            grid_n,
            alpha_true,
            priors: vec![Prior::cht(alpha_true), Prior::tuned_rbf()],
            m,
            noise_ratio,
            master_seed,
            truth_kind: TruthKind::GaussianCht,
            vortex: VortexParams::default(),
        }
    }

    /// Vortex truth, CHT prior with exponent `alpha` against tuned RBF.
    pub fn vortex(grid_n: usize, alpha: f64, m: usize, noise_ratio: f64, master_seed: u64) -> Self {
        Self {
            truth_kind: TruthKind::Vortex,
            ..Self::gaussian(grid_n, alpha, m, noise_ratio, master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid_n)?;
        if self.m == 0 {
            return Err(Error::InvalidParameter(
                "observation count must be at least 1".into(),
            ));
        }
        if !(self.noise_ratio >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise ratio must be >= 0, got {}",
                self.noise_ratio
            )));
        }
        if self.priors.len() < 2 {
            return Err(Error::InvalidParameter(
                "a trial needs a subject and a reference prior".into(),
            ));
        }
        if let Some(p) = self.priors.iter().find(|p| p.candidates.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "prior '{}' has no candidate kernels",
                p.label
            )));
        }
        if self.truth_kind == TruthKind::GaussianCht && !(self.alpha_true > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 0, got {}",
                self.alpha_true
            )));
        }
        if self.truth_kind == TruthKind::Vortex {
            self.vortex.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelError {
    pub label: String,
    /// Kernel used for the reconstruction (after tuning).
    pub spec: KernelSpec,
    /// `‖ŵ − w‖ / σ_w` on the grid.
    pub relative_error: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub errors: Vec<KernelError>,
    /// `100 (ε_reference − ε_subject) / ε_reference`.
    pub improvement_pct: f64,
    pub winner: String,
}

impl TrialResult {
    pub fn subject_wins(&self) -> bool {
        self.errors[0].relative_error < self.errors[1].relative_error
    }
}

/// Reconstruction error of `estimate` against `truth`: `(ε, rmse)`.
pub fn reconstruction_error(estimate: &RealField, truth: &RealField) -> (f64, f64) {
    let mse = estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / truth.values().len() as f64;
    let rmse = mse.sqrt();
    (rmse / truth.variance().sqrt(), rmse)
}

/// Kernel tables for every prior candidate, built once per configuration.
pub struct TrialContext {
    config: TrialConfig,
    grid: GridSpec,
    tables: Vec<Vec<KernelTable>>,
}

impl TrialContext {
    pub fn new(config: TrialConfig) -> Result<Self> {
        config.validate()?;
        let grid = GridSpec::new(config.grid_n)?;
        let tables = config
            .priors
            .iter()
            .map(|p| {
                p.candidates
                    .iter()
                    .map(|&s| build_kernel_table(s, grid))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            grid,
            tables,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn truth(&self, seed: u64) -> Result<Truth> {
        let truth_seed = derive_seed(seed, &[stream::TRUTH]);
        match self.config.truth_kind {
            TruthKind::GaussianCht => {
                generate_cht_truth(self.config.alpha_true, self.grid, truth_seed)
            }
            TruthKind::Vortex => generate_vortex_truth(&self.config.vortex, self.grid, truth_seed),
        }
    }

    /// Runs the trial whose randomness is fully determined by `seed`.
    pub fn run(&self, seed: u64) -> Result<TrialResult> {
        let truth = self.truth(seed)?.field;
        let obs = observe(&truth, self.config.m, self.config.noise_ratio, seed)?;
        let mut errors = Vec::with_capacity(self.config.priors.len());
        for (prior, tables) in self.config.priors.iter().zip(&self.tables) {
            let chosen = if tables.len() == 1 {
                0
            } else {
                select_table(tables, &obs)?.0
            };
            let mean = posterior_mean(&tables[chosen], &obs)?;
            let (relative_error, rmse) = reconstruction_error(&mean, &truth);
            errors.push(KernelError {
                label: prior.label.clone(),
                spec: prior.candidates[chosen],
                relative_error,
                rmse,
            });
        }
        let (subject, reference) = (errors[0].relative_error, errors[1].relative_error);
        let improvement_pct = 100.0 * (reference - subject) / reference;
        let winner = errors
            .iter()
            .fold(&errors[0], |best, e| {
                if e.relative_error < best.relative_error {
                    e
                } else {
                    best
                }
            })
            .label
            .clone();
        Ok(TrialResult {
            seed,
            errors,
            improvement_pct,
            winner,
        })
    }

    /// Trials `0..count` with seeds from [`trial_seed`], in index order.
    pub fn run_many(&self, seeds: &[u64]) -> Result<Vec<TrialResult>> {
        seeds.par_iter().map(|&s| self.run(s)).collect()
    }
}

/// Seed of trial `index` in sweep point `point` of a run with `master` seed.
pub fn trial_seed(master: u64, point: u64, index: u64) -> u64 {
    derive_seed(master, &[stream::TRIAL, point, index])
}

/// Single trial seeded directly by `config.master_seed`.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    TrialContext::new(config.clone())?.run(config.master_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Alpha,
    Density,
    Trial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub mean_improvement: f64,
    pub std_improvement: f64,
    pub win_rate: f64,
    pub trial_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Per-trial results, grouped by point in the order of `points`.
    pub trials: Vec<Vec<TrialResult>>,
}

impl SweepResult {
    /// Point with the largest mean improvement; ties go to the first.
    pub fn best_point(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&SweepPoint>, p| match best {
                Some(b) if b.mean_improvement >= p.mean_improvement => Some(b),
                _ => Some(p),
            })
    }
}

/// Mean, sample standard deviation and subject win rate over trials.
pub fn aggregate(axis_value: f64, trials: &[TrialResult]) -> SweepPoint {
    let count = trials.len();
    let mean = trials.iter().map(|t| t.improvement_pct).sum::<f64>() / count as f64;
    let std = if count > 1 {
        (trials
            .iter()
            .map(|t| (t.improvement_pct - mean).powi(2))
            .sum::<f64>()
            / (count - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let wins = trials.iter().filter(|t| t.subject_wins()).count();
    SweepPoint {
        axis_value,
        mean_improvement: mean,
        std_improvement: std,
        win_rate: wins as f64 / count as f64,
        trial_count: count,
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "trial count must be at least 1".into(),
        ));
    }
    Ok(())
}

/// `trials` independent repetitions of `base`, reported as a one-point sweep.
pub fn repeat_trials(base: &TrialConfig, trials: usize) -> Result<SweepResult> {
    check_trials(trials)?;
    let ctx = TrialContext::new(base.clone())?;
    let seeds: Vec<u64> = (0..trials as u64)
        .map(|t| trial_seed(base.master_seed, 0, t))
        .collect();
    let results = ctx.run_many(&seeds)?;
    Ok(SweepResult {
        axis: SweepAxis::Trial,
        points: vec![aggregate(trials as f64, &results)],
        trials: vec![results],
    })
}

/// Varies the subject prior's CHT exponent. Every point reconstructs the same
/// `trials` truths (drawn with `base.alpha_true`), so points differ only in
/// the prior.
pub fn sweep_alpha(base: &TrialConfig, alphas: &[f64], trials: usize) -> Result<SweepResult> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter(
            "alpha sweep needs at least one value".into(),
        ));
    }
    check_trials(trials)?;
    let seeds: Vec<u64> = (0..trials as u64)
        .map(|t| trial_seed(base.master_seed, 0, t))
        .collect();
    let mut points = Vec::with_capacity(alphas.len());
    let mut all = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut config = base.clone();
        config.priors[0] = Prior::cht(alpha);
        let results = TrialContext::new(config)?.run_many(&seeds)?;
        points.push(aggregate(alpha, &results));
        all.push(results);
    }
    Ok(SweepResult {
        axis: SweepAxis::Alpha,
        points,
        trials: all,
    })
}

/// Varies the observation count; trial seeds are independent across points.
pub fn sweep_density(base: &TrialConfig, m_values: &[usize], trials: usize) -> Result<SweepResult> {
    if m_values.is_empty() {
        return Err(Error::InvalidParameter(
            "density sweep needs at least one m".into(),
        ));
    }
    check_trials(trials)?;
    let mut points = Vec::with_capacity(m_values.len());
    let mut all = Vec::with_capacity(m_values.len());
    for (p, &m) in m_values.iter().enumerate() {
        let config = TrialConfig { m, ..base.clone() };
        let seeds: Vec<u64> = (0..trials as u64)
            .map(|t| trial_seed(base.master_seed, p as u64, t))
            .collect();
        let results = TrialContext::new(config)?.run_many(&seeds)?;
        points.push(aggregate(m as f64, &results));
        all.push(results);
    }
    Ok(SweepResult {
        axis: SweepAxis::Density,
        points,
        trials: all,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralValidation {
    pub alpha: f64,
    pub shell_sum_fit: PowerLawFit,
    pub mode_avg_fit: PowerLawFit,
    pub spectrum: SpectrumEstimate,
}

/// Default fit range `[4, N/4]`.
pub fn default_fit_range(grid: GridSpec) -> (usize, usize) {
    (4, grid.n() / 4)
}

/// For each `alpha`, averages the radial spectra of `seeds_per_alpha` truths
/// and fits both the shell-sum and mode-average power laws over `fit_range`.
pub fn spectral_validation(
    alphas: &[f64],
    grid: GridSpec,
    seeds_per_alpha: usize,
    master_seed: u64,
    fit_range: (usize, usize),
) -> Result<Vec<SpectralValidation>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter(
            "spectral validation needs at least one alpha".into(),
        ));
    }
    if seeds_per_alpha == 0 {
        return Err(Error::InvalidParameter(
            "seeds per alpha must be at least 1".into(),
        ));
    }
    alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let spectra = (0..seeds_per_alpha as u64)
                .into_par_iter()
                .map(|s| {
                    let seed = derive_seed(master_seed, &[stream::TRUTH, a as u64, s]);
                    Ok(radial_spectrum(
                        &generate_cht_truth(alpha, grid, seed)?.field,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let spectrum = SpectrumEstimate::average(&spectra)?;
            let (k_min, k_max) = fit_range;
            Ok(SpectralValidation {
                alpha,
                shell_sum_fit: fit_power_law(&spectrum, k_min, k_max, true)?,
                mode_avg_fit: fit_power_law(&spectrum, k_min, k_max, false)?,
                spectrum,
            })
        })
        .collect()
}

/// Excess kurtosis of grid values.
pub fn excess_kurtosis(field: &RealField) -> f64 {
    let mean = field.mean();
    let n = field.values().len() as f64;
    let m2 = field
        .values()
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / n;
    let m4 = field
        .values()
        .iter()
        .map(|v| (v - mean).powi(4))
        .sum::<f64>()
        / n;
    m4 / (m2 * m2) - 3.0
}

/// Label of the family a prior draws from, for reporting.
pub fn family_of(prior: &Prior) -> KernelFamily {
    prior.candidates[0].family
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn cht_truth_is_unit_variance_and_seed_dependent() {
        let g = grid(64);
        let a = generate_cht_truth(1.5, g, 1).unwrap();
        let b = generate_cht_truth(1.5, g, 2).unwrap();
        assert!((a.field.variance() - 1.0).abs() < 1e-12);
        assert!(a.field.mean().abs() < 1e-12);
        assert!(a.scale > 0.0);
        let diff = a
            .field
            .values()
            .iter()
            .zip(b.field.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff > 0.1);
        assert!(generate_cht_truth(0.0, g, 1).is_err());
    }

    #[test]
    fn single_vortex_peaks_at_nearest_grid_point() {
        let g = grid(32);
        let c = (1.3, 4.9);
        let f = superpose_vortices(
            g,
            &[Vortex {
                center: c,
                radius: 0.4,
                amplitude: 1.0,
            }],
        );
        let argmax = (0..g.len())
            .max_by(|&a, &b| f.values()[a].total_cmp(&f.values()[b]))
            .unwrap();
        let h = g.spacing();
        let nearest = g.index(
            (c.0 / h).round() as usize % 32,
            (c.1 / h).round() as usize % 32,
        );
        assert_eq!(argmax, nearest);
    }

    #[test]
    fn vortex_truth_is_normalized() {
        let g = grid(64);
        for seed in 0..3 {
            let t = generate_vortex_truth(&VortexParams::default(), g, seed).unwrap();
            assert!(t.field.mean().abs() < 1e-12);
            assert!((t.field.variance() - 1.0).abs() < 1e-12);
        }
        let bad = VortexParams {
            radius_range: (0.0, 0.5),
            ..VortexParams::default()
        };
        assert!(generate_vortex_truth(&bad, g, 0).is_err());
    }

    #[test]
    fn observation_model() {
        let g = grid(32);
        let t = generate_cht_truth(1.5, g, 4).unwrap().field;
        let exact = observe(&t, 50, 0.0, 9).unwrap();
        assert_eq!(exact.noise_variance, 0.0);
        for (loc, v) in exact.locations.iter().zip(&exact.values) {
            assert_eq!(*v, t.get(loc.0, loc.1));
        }
        let mut uniq = exact.locations.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 50);
        assert!((observe(&t, 10, 0.1, 9).unwrap().noise_variance - 0.01).abs() < 1e-12);
        assert!((observe(&t, 10, 0.08, 9).unwrap().noise_variance - 0.0064).abs() < 1e-12);
        assert!(observe(&t, 32 * 32 + 1, 0.1, 9).is_err());
        assert!(observe(&t, 0, 0.1, 9).is_err());
    }

    #[test]
    fn trial_is_deterministic_and_consistent() {
        let config = TrialConfig::gaussian(32, 1.5, 40, 0.1, 17);
        let a = run_trial(&config).unwrap();
        let b = run_trial(&config).unwrap();
        assert_eq!(a, b);
        for e in &a.errors {
            assert!(e.relative_error >= 0.0);
        }
        let (s, r) = (a.errors[0].relative_error, a.errors[1].relative_error);
        assert!((a.improvement_pct - 100.0 * (r - s) / r).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_noiseless_observation_reconstructs() {
        let mut config = TrialConfig::gaussian(16, 1.5, 256, 0.0, 5);
        config.priors = vec![Prior::cht(1.5), Prior::fixed("rbf", KernelSpec::rbf(0.3))];
        let r = run_trial(&config).unwrap();
        assert!(
            r.errors[0].relative_error < 1e-6,
            "{}",
            r.errors[0].relative_error
        );
    }

    #[test]
    fn metric_consistency() {
        let g = grid(16);
        let t = generate_cht_truth(1.0, g, 3).unwrap().field;
        let est = generate_cht_truth(1.0, g, 4).unwrap().field;
        let (eps, rmse) = reconstruction_error(&est, &t);
        assert!((eps - rmse / t.variance().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sweep_bookkeeping() {
        let base = TrialConfig::gaussian(16, 1.5, 20, 0.1, 3);
        let single = sweep_density(&base, &[20], 3).unwrap();
        assert_eq!(single.points.len(), 1);
        let sweep = sweep_density(&base, &[10, 20], 3).unwrap();
        for p in &sweep.points {
            assert_eq!(p.trial_count, 3);
            assert!((0.0..=1.0).contains(&p.win_rate));
        }
        assert!(sweep_density(&base, &[], 3).is_err());
        assert!(sweep_alpha(&base, &[], 3).is_err());

        let one = sweep_alpha(&base, &[1.5], 3).unwrap();
        let rep = repeat_trials(&base, 3).unwrap();
        assert_eq!(
            one.points[0].mean_improvement,
            rep.points[0].mean_improvement
        );
    }

    #[test]
    fn vortex_fields_are_heavy_tailed() {
        let g = grid(64);
        let mean_kurtosis = (0..20)
            .map(|s| {
                excess_kurtosis(
                    &generate_vortex_truth(&VortexParams::default(), g, s)
                        .unwrap()
                        .field,
                )
            })
            .sum::<f64>()
            / 20.0;
        assert!(mean_kurtosis > 0.5, "mean excess kurtosis {mean_kurtosis}");
    }
}
