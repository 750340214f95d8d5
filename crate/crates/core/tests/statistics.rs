//! Repeated-trial statistics of the GP layer on matched power-law data.

use turbogp_core::experiments::{observe, reconstruction_error};
use turbogp_core::gp::{
    energy_variance, fit_posterior, greedy_sensor_placement, log_marginal_likelihood, select_table,
    two_sided_z,
};
use turbogp_core::kernels::{build_kernel_table, spectral_density, KernelTable};
use turbogp_core::rng::derive_seed;
use turbogp_core::spectral_field::sample_gaussian_field;
use turbogp_core::{GridSpec, KernelSpec, ObservationSet, RealField};

const SEED: u64 = 2718;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).unwrap()
}

fn cht_truth(g: GridSpec, alpha: f64, s: u64) -> RealField {
    let density = spectral_density(KernelSpec::cht(alpha), g).unwrap();
    sample_gaussian_field(&density, g, derive_seed(SEED, &[1, s])).unwrap()
}

fn cht_data(g: GridSpec, m: usize, s: u64) -> (RealField, ObservationSet) {
    let truth = cht_truth(g, 1.5, s);
    let obs = observe(&truth, m, 0.1, derive_seed(SEED, &[2, s])).unwrap();
    (truth, obs)
}

fn tables(g: GridSpec, specs: &[KernelSpec]) -> Vec<KernelTable> {
    specs
        .iter()
        .map(|&s| build_kernel_table(s, g).unwrap())
        .collect()
}

#[test]
fn evidence_prefers_the_generating_exponent() {
    let g = grid(64);
    let right = build_kernel_table(KernelSpec::cht(1.5), g).unwrap();
    let wrong = build_kernel_table(KernelSpec::cht(0.25), g).unwrap();
    let wins = (0..20)
        .filter(|&s| {
            let (_, obs) = cht_data(g, 100, s);
            log_marginal_likelihood(&right, &obs).unwrap()
                >= log_marginal_likelihood(&wrong, &obs).unwrap()
        })
        .count();
    assert!(wins >= 16, "α=1.5 preferred in {wins}/20");
}

// On a grid capped at ℓ = 1.0 the evidence sits on the upper endpoint for
// most seeds: α = 1.5 data at N = 64 is smoother than that. The benchmark
// grid reaches 1.6.
#[test]
fn rbf_length_scale_selection_is_interior() {
    let g = grid(64);
    let ells: Vec<f64> = turbogp_core::experiments::DEFAULT_RBF_LENGTH_SCALES.to_vec();
    let specs: Vec<KernelSpec> = ells.iter().map(|&l| KernelSpec::rbf(l)).collect();
    let ts = tables(g, &specs);
    let interior = (0..20)
        .filter(|&s| {
            let (_, obs) = cht_data(g, 100, s);
            let (i, _) = select_table(&ts, &obs).unwrap();
            i != 0 && i != ells.len() - 1
        })
        .count();
    assert!(interior > 10, "interior ℓ in {interior}/20");
}

#[test]
fn generating_spec_ranks_in_top_two() {
    let g = grid(64);
    let specs = [
        KernelSpec::cht(0.5),
        KernelSpec::cht(1.0),
        KernelSpec::cht(1.5),
        KernelSpec::cht(2.0),
        KernelSpec::cht(2.5),
        KernelSpec::rbf(0.3),
        KernelSpec::rbf(0.6),
        KernelSpec::matern(1.5, 1.0),
    ];
    let ts = tables(g, &specs);
    let top2 = (0..20)
        .filter(|&s| {
            let (_, obs) = cht_data(g, 100, s);
            let lml: Vec<f64> = ts
                .iter()
                .map(|t| log_marginal_likelihood(t, &obs).unwrap())
                .collect();
            lml.iter().filter(|&&v| v > lml[2]).count() < 2
        })
        .count();
    assert!(top2 >= 14, "generating spec in top two in {top2}/20");
}

#[test]
fn credible_intervals_cover_matched_truths() {
    let g = grid(64);
    let table = build_kernel_table(KernelSpec::cht(1.5), g).unwrap();
    let z = two_sided_z(0.95).unwrap();
    let mut coverage = 0.0;
    for s in 0..20 {
        let (truth, obs) = cht_data(g, 60, s);
        let post = fit_posterior(&table, &obs).unwrap();
        coverage += truth
            .values()
            .iter()
            .zip(post.mean_field().values())
            .zip(post.variance_field().values())
            .filter(|((w, m), v)| (*w - *m).abs() <= z * v.sqrt())
            .count() as f64
            / g.len() as f64;
    }
    coverage /= 20.0;
    assert!((0.90..=0.99).contains(&coverage), "coverage {coverage}");
}

#[test]
fn energy_variance_never_grows_with_data() {
    let g = grid(32);
    for (k, spec) in [
        KernelSpec::cht(1.5),
        KernelSpec::rbf(0.4),
        KernelSpec::matern(1.5, 2.0),
    ]
    .into_iter()
    .enumerate()
    {
        let table = build_kernel_table(spec, g).unwrap();
        for s in 0..7 {
            let (_, full) = cht_data(g, 12, 100 * k as u64 + s);
            let mut prev = energy_variance(
                &fit_posterior(&table, &ObservationSet::empty(full.noise_variance)).unwrap(),
            )
            .unwrap();
            for m in 1..=full.len() {
                let obs = ObservationSet::new(
                    full.locations[..m].to_vec(),
                    full.values[..m].to_vec(),
                    full.noise_variance,
                )
                .unwrap();
                let ev = energy_variance(&fit_posterior(&table, &obs).unwrap()).unwrap();
                assert!(ev <= prev * (1.0 + 1e-12), "{spec} m={m}: {ev} > {prev}");
                prev = ev;
            }
        }
    }
}

#[test]
fn second_sensor_maximizes_variance_and_distance() {
    let g = grid(32);
    let table = build_kernel_table(KernelSpec::cht(1.5), g).unwrap();
    let x0 = (5, 9);
    let obs = ObservationSet::new(vec![x0], vec![0.3], 0.01).unwrap();

    let everywhere: Vec<(usize, usize)> = (0..g.len())
        .map(|p| g.unindex(p))
        .filter(|&c| c != x0)
        .collect();
    let pick = greedy_sensor_placement(&table, &obs, &everywhere, 1).unwrap()[0];
    let post = fit_posterior(&table, &obs).unwrap();
    let best = everywhere
        .iter()
        .map(|&c| post.variance_at(c))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(post.variance_at(pick) >= best - 1e-10);

    // along a ray where the table is positive and decreasing, the farthest
    // candidate has the largest variance
    let ray: Vec<(usize, usize)> = (1..6).map(|d| (x0.0, x0.1 + d)).collect();
    let k: Vec<f64> = ray.iter().map(|&c| table.between(c, x0)).collect();
    assert!(k.windows(2).all(|w| w[1] < w[0]) && k[4] > 0.0);
    assert_eq!(
        greedy_sensor_placement(&table, &obs, &ray, 1).unwrap()[0],
        ray[4]
    );
}

#[test]
fn median_error_contracts_with_more_data() {
    let g = grid(64);
    let table = build_kernel_table(KernelSpec::cht(1.5), g).unwrap();
    let medians: Vec<f64> = [20, 60, 150]
        .iter()
        .map(|&m| {
            let mut rmse: Vec<f64> = (0..10)
                .map(|s| {
                    let truth = cht_truth(g, 1.5, 500 + s);
                    let obs =
                        observe(&truth, m, 0.1, derive_seed(SEED, &[3, s, m as u64])).unwrap();
                    let post = fit_posterior(&table, &obs).unwrap();
                    reconstruction_error(post.mean_field(), &truth).1
                })
                .collect();
            rmse.sort_by(f64::total_cmp);
            0.5 * (rmse[4] + rmse[5])
        })
        .collect();
    assert!(
        medians.windows(2).all(|w| w[1] < w[0]),
        "medians {medians:?}"
    );
}
