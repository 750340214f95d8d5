//! Layered parameters: built-in defaults, then the `--config` file, then flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::{BaselineArg, EstimatorArg, FamilyArg, TruthArg};
use crate::CliError;

pub const SEED_ENV: &str = "TURBOGP_SEED";

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    pub alpha: f64,
    pub gamma: Option<f64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n: 128,
            alpha: 1.5,
            gamma: None,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub seeds: usize,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub estimator: EstimatorArg,
    pub gamma: Option<f64>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            n: 128,
            alphas: vec![1.5, 2.0, 2.5],
            seeds: 10,
            k_min: None,
            k_max: None,
            estimator: EstimatorArg::ShellSum,
            gamma: None,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub n: usize,
    pub trials: usize,
    pub noise: f64,
    pub alpha_true: f64,
    pub baseline: BaselineArg,
    pub baseline_nu: f64,
    pub gamma: Option<f64>,
    pub truth: TruthArg,
    pub m: usize,
    pub alpha: Option<f64>,
    pub vortex_count: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            n: 128,
            trials: 20,
            noise: 0.1,
            alpha_true: 1.5,
            baseline: BaselineArg::Rbf,
            baseline_nu: 1.5,
            gamma: None,
            truth: TruthArg::Gaussian,
            m: 100,
            alpha: None,
            vortex_count: 12,
        }
    }
}

/// CHT exponent used against vortex truths when none is given.
pub const VORTEX_DEFAULT_ALPHA: f64 = 1.25;

impl CompareConfig {
    pub fn prior_alpha(&self) -> f64 {
        self.alpha.unwrap_or(match self.truth {
            TruthArg::Gaussian => self.alpha_true,
            TruthArg::Vortex => VORTEX_DEFAULT_ALPHA,
        })
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAlphaConfig {
    pub n: usize,
    pub trials: usize,
    pub noise: f64,
    pub alpha_true: f64,
    pub baseline: BaselineArg,
    pub baseline_nu: f64,
    pub gamma: Option<f64>,
    pub alphas: Vec<f64>,
    pub m: usize,
}

impl Default for SweepAlphaConfig {
    fn default() -> Self {
        Self {
            n: 128,
            trials: 20,
            noise: 0.1,
            alpha_true: 1.5,
            baseline: BaselineArg::Rbf,
            baseline_nu: 1.5,
            gamma: None,
            alphas: vec![0.75, 1.0, 1.25, 1.5],
            m: 100,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SweepDensityConfig {
    pub n: usize,
    pub trials: usize,
    pub noise: f64,
    pub alpha_true: f64,
    pub baseline: BaselineArg,
    pub baseline_nu: f64,
    pub gamma: Option<f64>,
    pub m_values: Vec<usize>,
    pub alpha: Option<f64>,
}

impl Default for SweepDensityConfig {
    fn default() -> Self {
        Self {
            n: 128,
            trials: 20,
            noise: 0.1,
            alpha_true: 1.5,
            baseline: BaselineArg::Rbf,
            baseline_nu: 1.5,
            gamma: None,
            m_values: vec![20, 40, 60, 80, 100, 150],
            alpha: None,
        }
    }
}

/// Fields describing one fixed prior.
#[derive(Debug, Clone, Copy)]
pub struct KernelChoice {
    pub kernel: FamilyArg,
    pub alpha: f64,
    pub length_scale: f64,
    pub nu: f64,
    pub variance: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct PlaceConfig {
    pub kernel: FamilyArg,
    pub alpha: f64,
    pub length_scale: f64,
    pub nu: f64,
    pub variance: f64,
    pub gamma: Option<f64>,
    pub n: usize,
    pub count: usize,
    pub stride: usize,
    pub observations: Option<PathBuf>,
    pub noise_var: f64,
}

impl Default for PlaceConfig {
    fn default() -> Self {
        Self {
            kernel: FamilyArg::Cht,
            alpha: 1.5,
            length_scale: 0.3,
            nu: 1.5,
            variance: 1.0,
            gamma: None,
            n: 64,
            count: 10,
            stride: 1,
            observations: None,
            noise_var: 0.0,
        }
    }
}

impl PlaceConfig {
    pub fn kernel_choice(&self) -> KernelChoice {
        KernelChoice {
            kernel: self.kernel,
            alpha: self.alpha,
            length_scale: self.length_scale,
            nu: self.nu,
            variance: self.variance,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub kernel: FamilyArg,
    pub alpha: f64,
    pub length_scale: f64,
    pub nu: f64,
    pub variance: f64,
    pub gamma: Option<f64>,
    pub n: usize,
    pub observations: Option<PathBuf>,
    pub noise_var: Option<f64>,
    pub truth: TruthArg,
    pub alpha_true: f64,
    pub m: usize,
    pub noise: f64,
    pub level: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            kernel: FamilyArg::Cht,
            alpha: 1.5,
            length_scale: 0.3,
            nu: 1.5,
            variance: 1.0,
            gamma: None,
            n: 128,
            observations: None,
            noise_var: None,
            truth: TruthArg::Gaussian,
            alpha_true: 1.5,
            m: 100,
            noise: 0.1,
            level: 0.95,
        }
    }
}

impl ReconstructConfig {
    pub fn kernel_choice(&self) -> KernelChoice {
        KernelChoice {
            kernel: self.kernel,
            alpha: self.alpha,
            length_scale: self.length_scale,
            nu: self.nu,
            variance: self.variance,
        }
    }
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage(format!(
            "config {} must hold a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::Usage(format!(
            "config {} is not valid JSON: {e}",
            path.display()
        ))),
    }
}

fn seed_from_value(v: &Value) -> Result<u64, CliError> {
    v.as_u64().ok_or_else(|| {
        CliError::Usage(format!(
            "config seed must be a non-negative integer, got {v}"
        ))
    })
}

fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| {
            CliError::Usage(format!("{SEED_ENV}={s:?} is not a non-negative integer"))
        }),
        Err(_) => Ok(None),
    }
}

/// Merges defaults, the config file and the explicitly given flags into `C`,
/// and resolves the master seed.
pub fn resolve<A: Serialize, C: DeserializeOwned>(
    config_file: Option<&Path>,
    seed_flag: Option<u64>,
    flags: &A,
) -> Result<(C, u64), CliError> {
    let mut merged = match config_file {
        Some(path) => read_config_file(path)?,
        None => Map::new(),
    };
    let file_seed = merged
        .remove("seed")
        .map(|v| seed_from_value(&v))
        .transpose()?;
    match serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))? {
        Value::Object(flag_map) => merged.extend(flag_map),
        _ => unreachable!("argument structs serialize to objects"),
    }
    let config = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    let seed = match seed_flag.or(file_seed) {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(0),
    };
    Ok((config, seed))
}
