use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use turbogp_core::ObservationSet;

use crate::CliError;

/// Bumped whenever a CSV column layout changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const EXPONENTS_HEADER: [&str; 7] = [
    "alpha",
    "estimator",
    "exponent",
    "stderr",
    "k_min",
    "k_max",
    "r_squared",
];
pub const TRIALS_HEADER: [&str; 6] = ["seed", "kernel", "eps", "rmse", "improvement_pct", "winner"];
pub const DENSITY_HEADER: [&str; 5] = [
    "m",
    "mean_improvement",
    "std_improvement",
    "win_rate",
    "trials",
];
pub const ALPHA_SWEEP_HEADER: [&str; 5] = [
    "alpha",
    "mean_improvement",
    "std_improvement",
    "win_rate",
    "trials",
];
pub const SPECTRUM_HEADER: [&str; 4] = ["k", "shell_avg_power", "shell_sum_power", "mode_count"];
pub const SENSORS_HEADER: [&str; 6] = ["rank", "i", "j", "x1", "x2", "variance"];
pub const OBSERVATIONS_HEADER: [&str; 3] = ["i", "j", "value"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_echo: Value,
    pub master_seed: u64,
    pub tool_version: &'static str,
    pub csv_schema_version: u32,
    pub wall_time_s: f64,
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| {
            CliError::Usage(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv<const K: usize>(
        &self,
        name: &str,
        header: [&str; K],
        rows: impl IntoIterator<Item = [String; K]>,
    ) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(header).map_err(|e| io_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

#[derive(serde::Deserialize)]
struct ObservationRow {
    i: usize,
    j: usize,
    value: f64,
}

/// Reads `i,j,value` rows; the noise variance is supplied separately.
pub fn read_observations(path: &Path, noise_variance: f64) -> Result<ObservationSet, CliError> {
    let bad = |e: &dyn std::fmt::Display| {
        CliError::Usage(format!("cannot read observations {}: {e}", path.display()))
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    let mut locations = Vec::new();
    let mut values = Vec::new();
    for row in reader.deserialize::<ObservationRow>() {
        let row = row.map_err(|e| bad(&e))?;
        locations.push((row.i, row.j));
        values.push(row.value);
    }
    Ok(ObservationSet::new(locations, values, noise_variance)?)
}

pub fn observation_rows(obs: &ObservationSet) -> impl Iterator<Item = [String; 3]> + '_ {
    obs.locations
        .iter()
        .zip(&obs.values)
        .map(|(&(i, j), &v)| [i.to_string(), j.to_string(), num(v)])
}
