use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use turbogp_core::experiments::{
    default_fit_range, generate_cht_truth, generate_vortex_truth, observe, reconstruction_error,
    repeat_trials, spectral_validation, sweep_alpha, sweep_density, Prior, SweepResult,
    TrialConfig, TrialResult, TruthKind, VortexParams, DEFAULT_RBF_LENGTH_SCALES,
};
use turbogp_core::gp::{energy_variance, fit_posterior, greedy_sensor_placement, two_sided_z};
use turbogp_core::kernels::{build_kernel_table, check_admissible, spectral_density};
use turbogp_core::rng::{derive_seed, stream};
use turbogp_core::spectral_field::{
    radial_spectrum_of_coefficients, sample_coefficients, to_physical, write_field_dump,
    DumpPayload,
};
use turbogp_core::{Error, GridSpec, KernelSpec, ObservationSet};

use crate::args::{BaselineArg, Command, EstimatorArg, FamilyArg, TruthArg};
use crate::config::{
    resolve, CompareConfig, KernelChoice, PlaceConfig, ReconstructConfig, SampleConfig,
    SweepAlphaConfig, SweepDensityConfig, ValidateConfig,
};
use crate::output::*;
use crate::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    let started = Instant::now();
    let name = command.name();
    let common = command.common().clone();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    }
    let cfg_file = common.config.as_deref();
    let out = OutDir::create(&common.out)?;
    let (config_echo, seed) = match &command {
        Command::Sample(a) => {
            let (c, seed) = resolve::<_, SampleConfig>(cfg_file, common.seed, a)?;
            sample(&c, seed, &out)?;
            (echo(&c), seed)
        }
        Command::ValidateSpectrum(a) => {
            let (c, seed) = resolve::<_, ValidateConfig>(cfg_file, common.seed, a)?;
            validate_spectrum(&c, seed, &out)?;
            (echo(&c), seed)
        }
        Command::Compare(a) => {
            let (c, seed) = resolve::<_, CompareConfig>(cfg_file, common.seed, a)?;
            compare(&c, seed, &out)?;
            (echo(&c), seed)
        }
        Command::SweepAlpha(a) => {
            let (c, seed) = resolve::<_, SweepAlphaConfig>(cfg_file, common.seed, a)?;
            alpha_sweep(&c, seed, &out)?;
            (echo(&c), seed)
        }
        Command::SweepDensity(a) => {
            let (c, seed) = resolve::<_, SweepDensityConfig>(cfg_file, common.seed, a)?;
            density_sweep(&c, seed, &out)?;
            (echo(&c), seed)
        }
        Command::PlaceSensors(a) => {
            let (c, seed) = resolve::<_, PlaceConfig>(cfg_file, common.seed, a)?;
            place_sensors(&c, &out)?;
            (echo(&c), seed)
        }
        Command::Reconstruct(a) => {
            let (c, seed) = resolve::<_, ReconstructConfig>(cfg_file, common.seed, a)?;
            reconstruct(&c, seed, &out)?;
            (echo(&c), seed)
        }
    };
    out.write_json(
        "manifest.json",
        &Manifest {
            command: name,
            config_echo,
            master_seed: seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            csv_schema_version: CSV_SCHEMA_VERSION,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    )
}

fn echo(config: &impl Serialize) -> Value {
    serde_json::to_value(config).expect("configs serialize")
}

fn check_alpha(flag: &str, alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{flag} {alpha} is invalid: the spectral exponent requires α > 0"
        )))
    }
}

/// Rejects CHT exponents outside the unique-invariant-measure regime for `γ`.
fn check_gamma(gamma: Option<f64>, alphas: &[f64]) -> Result<(), CliError> {
    let Some(gamma) = gamma else {
        return Ok(());
    };
    for &alpha in alphas {
        if !check_admissible(alpha, gamma)? {
            let bound = if gamma == 1.0 { 0.0 } else { 2.0 - gamma };
            return Err(Error::Inadmissible(format!(
                "α = {alpha} with γ = {gamma} violates the admissibility bound α > 2 − γ = {bound}"
            ))
            .into());
        }
    }
    Ok(())
}

fn sample(c: &SampleConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    check_alpha("alpha", c.alpha)?;
    check_gamma(c.gamma, &[c.alpha])?;
    let grid = GridSpec::new(c.n)?;
    let density = spectral_density(KernelSpec::cht(c.alpha), grid)?;
    let coeffs = sample_coefficients(&density, grid, seed)?;
    let field = to_physical(&coeffs);
    write_field_dump(
        &out.path("field"),
        Some(seed),
        Some(c.alpha),
        &DumpPayload::Real(field),
    )?;
    let spectrum = radial_spectrum_of_coefficients(&coeffs);
    out.write_csv(
        "spectrum.csv",
        SPECTRUM_HEADER,
        spectrum.shells.iter().map(|s| {
            [
                s.k.to_string(),
                num(s.shell_avg_power),
                num(s.shell_sum_power),
                s.mode_count.to_string(),
            ]
        }),
    )
}

fn validate_spectrum(c: &ValidateConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    for &a in &c.alphas {
        check_alpha("alphas", a)?;
    }
    check_gamma(c.gamma, &c.alphas)?;
    let grid = GridSpec::new(c.n)?;
    let (lo, hi) = default_fit_range(grid);
    let range = (c.k_min.unwrap_or(lo), c.k_max.unwrap_or(hi));
    let results = spectral_validation(&c.alphas, grid, c.seeds, seed, range)?;
    let mut rows = Vec::new();
    for r in &results {
        let fits = match c.estimator {
            EstimatorArg::ShellSum => vec![("shell_sum", r.shell_sum_fit)],
            EstimatorArg::ModeAvg => vec![("mode_avg", r.mode_avg_fit)],
            EstimatorArg::Both => {
                vec![("shell_sum", r.shell_sum_fit), ("mode_avg", r.mode_avg_fit)]
            }
        };
        for (label, fit) in fits {
            rows.push([
                num(r.alpha),
                label.to_string(),
                num(fit.exponent),
                num(fit.exponent_stderr),
                fit.k_min.to_string(),
                fit.k_max.to_string(),
                num(fit.r_squared),
            ]);
        }
    }
    out.write_csv("exponents.csv", EXPONENTS_HEADER, rows)
}

fn baseline_prior(baseline: BaselineArg, nu: f64) -> Prior {
    match baseline {
        BaselineArg::Rbf => Prior::tuned_rbf(),
        BaselineArg::Matern => Prior::tuned(
            "matern",
            DEFAULT_RBF_LENGTH_SCALES
                .iter()
                .map(|&l| KernelSpec::matern(nu, l))
                .collect(),
        ),
    }
}

struct TrialSetup {
    n: usize,
    alpha_true: f64,
    prior_alpha: f64,
    m: usize,
    noise: f64,
    truth: TruthArg,
    baseline: BaselineArg,
    baseline_nu: f64,
    vortex_count: usize,
}

impl TrialSetup {
    fn build(&self, seed: u64) -> Result<TrialConfig, CliError> {
        check_alpha("alpha-true", self.alpha_true)?;
        check_alpha("alpha", self.prior_alpha)?;
        let mut config = TrialConfig::gaussian(self.n, self.alpha_true, self.m, self.noise, seed);
        config.priors = vec![
            Prior::cht(self.prior_alpha),
            baseline_prior(self.baseline, self.baseline_nu),
        ];
        if self.truth == TruthArg::Vortex {
            config.truth_kind = TruthKind::Vortex;
            config.vortex = VortexParams {
                vortex_count: self.vortex_count,
                ..VortexParams::default()
            };
        }
        config.validate()?;
        Ok(config)
    }
}

fn trial_rows(results: &[TrialResult]) -> Vec<[String; 6]> {
    results
        .iter()
        .flat_map(|t| {
            t.errors.iter().map(move |e| {
                [
                    t.seed.to_string(),
                    e.spec.to_string(),
                    num(e.relative_error),
                    num(e.rmse),
                    num(t.improvement_pct),
                    t.winner.clone(),
                ]
            })
        })
        .collect()
}

fn mean_eps(results: &[TrialResult], k: usize) -> f64 {
    results
        .iter()
        .map(|t| t.errors[k].relative_error)
        .sum::<f64>()
        / results.len() as f64
}

fn compare(c: &CompareConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    let prior_alpha = c.prior_alpha();
    check_gamma(c.gamma, &[prior_alpha])?;
    let base = TrialSetup {
        n: c.n,
        alpha_true: c.alpha_true,
        prior_alpha,
        m: c.m,
        noise: c.noise,
        truth: c.truth,
        baseline: c.baseline,
        baseline_nu: c.baseline_nu,
        vortex_count: c.vortex_count,
    }
    .build(seed)?;
    let sweep = repeat_trials(&base, c.trials)?;
    let results = &sweep.trials[0];
    out.write_csv("trials.csv", TRIALS_HEADER, trial_rows(results))?;
    let point = sweep.points[0];
    let mut summary = serde_json::Map::new();
    summary.insert("truth".into(), json!(c.truth));
    summary.insert("trials".into(), json!(point.trial_count));
    summary.insert("alpha_prior".into(), json!(prior_alpha));
    for (k, prior) in base.priors.iter().enumerate() {
        summary.insert(
            format!("mean_eps_{}", prior.label),
            json!(mean_eps(results, k)),
        );
    }
    summary.insert("mean_improvement".into(), json!(point.mean_improvement));
    summary.insert("std_improvement".into(), json!(point.std_improvement));
    summary.insert("win_rate".into(), json!(point.win_rate));
    out.write_json("summary.json", &summary)
}

fn sweep_rows(sweep: &SweepResult, axis_as_int: bool) -> Vec<[String; 5]> {
    sweep
        .points
        .iter()
        .map(|p| {
            [
                if axis_as_int {
                    (p.axis_value as usize).to_string()
                } else {
                    num(p.axis_value)
                },
                num(p.mean_improvement),
                num(p.std_improvement),
                num(p.win_rate),
                p.trial_count.to_string(),
            ]
        })
        .collect()
}

fn all_trial_rows(sweep: &SweepResult) -> Vec<[String; 6]> {
    sweep.trials.iter().flat_map(|t| trial_rows(t)).collect()
}

fn alpha_sweep(c: &SweepAlphaConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    for &a in &c.alphas {
        check_alpha("alphas", a)?;
    }
    check_gamma(c.gamma, &c.alphas)?;
    let base = TrialSetup {
        n: c.n,
        alpha_true: c.alpha_true,
        prior_alpha: c.alpha_true,
        m: c.m,
        noise: c.noise,
        truth: TruthArg::Gaussian,
        baseline: c.baseline,
        baseline_nu: c.baseline_nu,
        vortex_count: VortexParams::default().vortex_count,
    }
    .build(seed)?;
    let sweep = sweep_alpha(&base, &c.alphas, c.trials)?;
    out.write_csv(
        "alpha_sweep.csv",
        ALPHA_SWEEP_HEADER,
        sweep_rows(&sweep, false),
    )?;
    out.write_csv("trials.csv", TRIALS_HEADER, all_trial_rows(&sweep))?;
    let best = sweep.best_point().expect("nonempty sweep");
    out.write_json(
        "summary.json",
        &json!({
            "best_alpha": best.axis_value,
            "best_mean_improvement": best.mean_improvement,
            "all_points_positive": sweep.points.iter().all(|p| p.mean_improvement > 0.0),
        }),
    )
}

/// Kendall rank correlation between the axis and the mean improvement.
fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[j] - x[i]) * (y[j] - y[i])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

fn density_sweep(c: &SweepDensityConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    let prior_alpha = c.alpha.unwrap_or(c.alpha_true);
    check_gamma(c.gamma, &[prior_alpha])?;
    let first_m = *c
        .m_values
        .first()
        .ok_or_else(|| CliError::Usage("--m needs at least one value".into()))?;
    let base = TrialSetup {
        n: c.n,
        alpha_true: c.alpha_true,
        prior_alpha,
        m: first_m,
        noise: c.noise,
        truth: TruthArg::Gaussian,
        baseline: c.baseline,
        baseline_nu: c.baseline_nu,
        vortex_count: VortexParams::default().vortex_count,
    }
    .build(seed)?;
    let sweep = sweep_density(&base, &c.m_values, c.trials)?;
    out.write_csv("density.csv", DENSITY_HEADER, sweep_rows(&sweep, true))?;
    out.write_csv("trials.csv", TRIALS_HEADER, all_trial_rows(&sweep))?;
    let ms: Vec<f64> = sweep.points.iter().map(|p| p.axis_value).collect();
    let imp: Vec<f64> = sweep.points.iter().map(|p| p.mean_improvement).collect();
    let first = sweep.points.first().expect("nonempty sweep");
    let last = sweep.points.last().expect("nonempty sweep");
    out.write_json(
        "summary.json",
        &json!({
            "first_m": first.axis_value,
            "last_m": last.axis_value,
            "last_exceeds_first": last.mean_improvement > first.mean_improvement,
            "increasing_steps": imp.windows(2).filter(|w| w[1] > w[0]).count(),
            "kendall_tau": kendall_tau(&ms, &imp),
        }),
    )
}

fn kernel_spec(k: KernelChoice, gamma: Option<f64>) -> Result<KernelSpec, CliError> {
    let spec = match k.kernel {
        FamilyArg::Cht => {
            check_alpha("alpha", k.alpha)?;
            check_gamma(gamma, &[k.alpha])?;
            KernelSpec::cht(k.alpha)
        }
        FamilyArg::Rbf => KernelSpec::rbf(k.length_scale),
        FamilyArg::Matern => KernelSpec::matern(k.nu, k.length_scale),
    }
    .with_variance(k.variance);
    spec.validate()?;
    Ok(spec)
}

fn place_sensors(c: &PlaceConfig, out: &OutDir) -> Result<(), CliError> {
    let grid = GridSpec::new(c.n)?;
    let spec = kernel_spec(c.kernel_choice(), c.gamma)?;
    let table = build_kernel_table(spec, grid)?;
    if c.stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }
    let obs = match &c.observations {
        Some(path) => read_observations(path, c.noise_var)?,
        None => ObservationSet::new(Vec::new(), Vec::new(), c.noise_var)?,
    };
    let candidates: Vec<(usize, usize)> = (0..grid.len())
        .map(|p| grid.unindex(p))
        .filter(|&(i, j)| i % c.stride == 0 && j % c.stride == 0)
        .filter(|loc| !obs.locations.contains(loc))
        .collect();
    let chosen = greedy_sensor_placement(&table, &obs, &candidates, c.count)?;
    let mut current = obs.clone();
    let mut rows = Vec::with_capacity(chosen.len());
    for (rank, &(i, j)) in chosen.iter().enumerate() {
        let variance = fit_posterior(&table, &current)?.variance_at((i, j));
        let (x1, x2) = grid.point(i, j);
        rows.push([
            (rank + 1).to_string(),
            i.to_string(),
            j.to_string(),
            num(x1),
            num(x2),
            num(variance),
        ]);
        current.locations.push((i, j));
        current.values.push(0.0);
    }
    out.write_csv("sensors.csv", SENSORS_HEADER, rows)
}

fn reconstruct(c: &ReconstructConfig, seed: u64, out: &OutDir) -> Result<(), CliError> {
    let grid = GridSpec::new(c.n)?;
    let spec = kernel_spec(c.kernel_choice(), c.gamma)?;
    let z = two_sided_z(c.level)?;
    let table = build_kernel_table(spec, grid)?;

    let (obs, truth) = match &c.observations {
        Some(path) => (read_observations(path, c.noise_var.unwrap_or(0.0))?, None),
        None => {
            let truth_seed = derive_seed(seed, &[stream::TRUTH]);
            let truth = match c.truth {
                TruthArg::Gaussian => {
                    check_alpha("alpha-true", c.alpha_true)?;
                    generate_cht_truth(c.alpha_true, grid, truth_seed)?
                }
                TruthArg::Vortex => {
                    generate_vortex_truth(&VortexParams::default(), grid, truth_seed)?
                }
            };
            let obs = observe(
                &truth.field,
                c.m,
                c.noise,
                derive_seed(seed, &[stream::TRIAL]),
            )?;
            write_field_dump(
                &out.path("truth"),
                Some(seed),
                None,
                &DumpPayload::Real(truth.field.clone()),
            )?;
            (obs, Some(truth.field))
        }
    };
    out.write_csv(
        "observations.csv",
        OBSERVATIONS_HEADER,
        observation_rows(&obs),
    )?;

    let post = fit_posterior(&table, &obs)?;
    let alpha = (spec.family == turbogp_core::KernelFamily::Cht).then_some(spec.alpha);
    write_field_dump(
        &out.path("mean"),
        Some(seed),
        alpha,
        &DumpPayload::Real(post.mean_field().clone()),
    )?;
    write_field_dump(
        &out.path("variance"),
        Some(seed),
        alpha,
        &DumpPayload::Real(post.variance_field().clone()),
    )?;

    let half: Vec<f64> = post
        .variance_field()
        .values()
        .iter()
        .map(|v| z * v.max(0.0).sqrt())
        .collect();
    let mut band = serde_json::Map::new();
    band.insert("level".into(), json!(c.level));
    band.insert("z".into(), json!(z));
    band.insert("kernel".into(), json!(spec.to_string()));
    band.insert("observations".into(), json!(obs.len()));
    band.insert("noise_variance".into(), json!(obs.noise_variance));
    band.insert("jitter".into(), json!(post.jitter()));
    band.insert("clamped_variances".into(), json!(post.clamped_count()));
    band.insert(
        "mean_half_width".into(),
        json!(half.iter().sum::<f64>() / half.len() as f64),
    );
    band.insert(
        "max_half_width".into(),
        json!(half.iter().cloned().fold(0.0, f64::max)),
    );
    band.insert("energy_variance".into(), json!(energy_variance(&post)?));
    if let Some(truth) = truth {
        let covered = truth
            .values()
            .iter()
            .zip(post.mean_field().values())
            .zip(&half)
            .filter(|((t, m), h)| (*t - *m).abs() <= **h)
            .count();
        band.insert("coverage".into(), json!(covered as f64 / half.len() as f64));
        let (eps, rmse) = reconstruction_error(post.mean_field(), &truth);
        band.insert("relative_error".into(), json!(eps));
        band.insert("rmse".into(), json!(rmse));
    }
    out.write_json("band.json", &band)
}
