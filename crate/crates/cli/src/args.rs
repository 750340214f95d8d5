use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "turbogp",
    version,
    about = "Spectral Gaussian-process priors for 2D vorticity fields on the torus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a power-law Gaussian vorticity field and its radial spectrum.
    Sample(SampleArgs),
    /// Fit spectral exponents of sampled fields for a list of α.
    ValidateSpectrum(ValidateArgs),
    /// Repeated CHT-vs-baseline reconstruction trials.
    Compare(CompareArgs),
    /// Vary the reconstruction α against fixed-α truths.
    SweepAlpha(SweepAlphaArgs),
    /// Vary the observation count.
    SweepDensity(SweepDensityArgs),
    /// Greedy maximum-variance sensor placement.
    PlaceSensors(PlaceArgs),
    /// Posterior mean, variance and credible band from observations.
    Reconstruct(ReconstructArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::ValidateSpectrum(_) => "validate-spectrum",
            Command::Compare(_) => "compare",
            Command::SweepAlpha(_) => "sweep-alpha",
            Command::SweepDensity(_) => "sweep-density",
            Command::PlaceSensors(_) => "place-sensors",
            Command::Reconstruct(_) => "reconstruct",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Sample(a) => &a.common,
            Command::ValidateSpectrum(a) => &a.common,
            Command::Compare(a) => &a.common,
            Command::SweepAlpha(a) => &a.common,
            Command::SweepDensity(a) => &a.common,
            Command::PlaceSensors(a) => &a.common,
            Command::Reconstruct(a) => &a.common,
        }
    }
}

/// Flags shared by every command. Not part of the layered configuration
/// except for the seed, which a config file may also supply.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; falls back to the config file, then TURBOGP_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file of parameter values; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TruthArg {
    Gaussian,
    Vortex,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BaselineArg {
    Rbf,
    Matern,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Cht,
    Rbf,
    Matern,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    ShellSum,
    ModeAvg,
    Both,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    /// Grid size N (even, ≥ 8).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Spectral exponent α > 0.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Dissipation exponent γ ∈ (2/3, 1]; rejects α outside the admissible range.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Comma-separated α values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Fields averaged per α.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    /// Lowest fitted shell (default 4).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    /// Highest fitted shell (default N/4).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Trial parameters shared by the comparison commands.
#[derive(Args, Serialize, Debug)]
pub struct TrialArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Trials per configuration.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Noise standard deviation as a fraction of the truth's RMS.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// α of the Gaussian truths.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_true: Option<f64>,
    /// Tuned baseline family.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineArg>,
    /// Smoothness of the Matérn baseline.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_nu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub trial: TrialArgs,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthArg>,
    /// Observations per trial.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// α of the CHT prior (default: alpha-true for Gaussian truths, 1.25 for vortices).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vortex_count: Option<usize>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepAlphaArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub trial: TrialArgs,
    /// Comma-separated reconstruction α values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepDensityArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub trial: TrialArgs,
    /// Comma-separated observation counts.
    #[arg(long = "m", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
    /// α of the CHT prior (default: alpha-true).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// A single fixed prior.
#[derive(Args, Serialize, Debug)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<FamilyArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Prior variance σ².
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct PlaceArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Sensors to place.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Candidates are grid points whose indices are multiples of the stride.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Existing observations, CSV with columns i,j,value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
    /// Observation noise variance σ²_obs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ReconstructArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Observations, CSV with columns i,j,value. Without it a synthetic truth
    /// is drawn and observed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
    /// Noise variance of the supplied observations.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
    /// Synthetic truth kind.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_true: Option<f64>,
    /// Synthetic observation count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Synthetic noise as a fraction of the truth's RMS.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Credible level of the reported band.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}
