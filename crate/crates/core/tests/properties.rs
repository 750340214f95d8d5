use proptest::prelude::*;
use turbogp_core::gp::{fit_posterior, log_marginal_likelihood};
use turbogp_core::kernels::{build_kernel_table, spectral_density};
use turbogp_core::spectral_field::{
    biot_savart_spectral, radial_spectrum, sample_coefficients, spectral_divergence, to_physical,
    to_spectral,
};
use turbogp_core::{GridSpec, KernelSpec, ObservationSet};

fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.3f64..3.0).prop_map(KernelSpec::cht),
        (0.1f64..1.5).prop_map(KernelSpec::rbf),
        (0.5f64..3.0, 0.5f64..4.0).prop_map(|(nu, l)| KernelSpec::matern(nu, l)),
    ]
}

fn obs_strategy(n: usize) -> impl Strategy<Value = ObservationSet> {
    (
        proptest::sample::subsequence((0..n * n).collect::<Vec<_>>(), 1..12),
        0.0f64..0.3,
    )
        .prop_flat_map(move |(idx, noise)| {
            let m = idx.len();
            (
                Just(idx),
                proptest::collection::vec(-2.0f64..2.0, m),
                Just(noise),
            )
        })
        .prop_map(move |(idx, values, noise)| {
            let locs = idx.into_iter().map(|p| (p / n, p % n)).collect();
            ObservationSet::new(locs, values, noise).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn posterior_variance_stays_within_prior(spec in spec_strategy(), obs in obs_strategy(16)) {
        let grid = GridSpec::new(16).unwrap();
        let table = build_kernel_table(spec, grid).unwrap();
        let post = fit_posterior(&table, &obs).unwrap();
        for &v in post.variance_field().values() {
            prop_assert!(v >= 0.0 && v <= table.variance() + 1e-8);
        }
    }

    #[test]
    fn posterior_is_permutation_invariant(
        spec in spec_strategy(),
        obs in obs_strategy(16),
        shift in 0usize..11,
    ) {
        let grid = GridSpec::new(16).unwrap();
        let table = build_kernel_table(spec, grid).unwrap();
        let mut perm = obs.clone();
        let k = shift % obs.len();
        perm.locations.rotate_left(k);
        perm.values.rotate_left(k);
        perm.locations.reverse();
        perm.values.reverse();
        let a = fit_posterior(&table, &obs).unwrap();
        let b = fit_posterior(&table, &perm).unwrap();
        prop_assume!(a.jitter() == b.jitter());
        let scale = a.mean_field().max_abs().max(1.0);
        for (x, y) in a.mean_field().values().iter().zip(b.mean_field().values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        for (x, y) in a.variance_field().values().iter().zip(b.variance_field().values()) {
            prop_assert!((x - y).abs() <= 1e-12 * table.variance());
        }
        let la = log_marginal_likelihood(&table, &obs).unwrap();
        let lb = log_marginal_likelihood(&table, &perm).unwrap();
        prop_assert!((la - lb).abs() <= 1e-9 * la.abs().max(1.0));
    }

    #[test]
    fn kernel_table_is_symmetric_and_peaked(spec in spec_strategy()) {
        let grid = GridSpec::new(16).unwrap();
        let table = build_kernel_table(spec, grid).unwrap();
        let k0 = table.at_offset(0, 0);
        prop_assert!((k0 - 1.0).abs() < 1e-12);
        for a in -8i64..8 {
            for b in -8i64..8 {
                let v = table.at_offset(a, b);
                prop_assert_eq!(v, table.at_offset(-a, -b));
                prop_assert_eq!(v, table.at_offset(b, a));
                prop_assert!(v.abs() <= k0 + 1e-12);
            }
        }
    }

    #[test]
    fn sampled_fields_are_real_and_divergence_free(alpha in 0.3f64..3.0, seed in any::<u64>()) {
        let grid = GridSpec::new(32).unwrap();
        let density = spectral_density(KernelSpec::cht(alpha), grid).unwrap();
        let coeffs = sample_coefficients(&density, grid, seed).unwrap();
        prop_assert_eq!(coeffs.hermitian_defect(), 0.0);
        let (u1, u2) = biot_savart_spectral(&coeffs).unwrap();
        let div = spectral_divergence(&u1, &u2).unwrap();
        prop_assert!(div.coeffs().iter().all(|c| c.re == 0.0 && c.im == 0.0));
        let field = to_physical(&coeffs);
        prop_assert!(field.mean().abs() <= 1e-10 * field.rms());
        let back = to_spectral(&field);
        let err = back.coeffs().iter().zip(coeffs.coeffs())
            .map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * field.rms());
    }

    #[test]
    fn shell_sums_account_for_every_mode(alpha in 0.5f64..2.5, seed in any::<u64>()) {
        let grid = GridSpec::new(32).unwrap();
        let density = spectral_density(KernelSpec::cht(alpha), grid).unwrap();
        let coeffs = sample_coefficients(&density, grid, seed).unwrap();
        let spectrum = radial_spectrum(&to_physical(&coeffs));
        let total: f64 = spectrum.shells.iter().map(|s| s.shell_sum_power).sum();
        let binned: f64 = grid
            .modes()
            .filter(|&(_, a, b)| ((a * a + b * b) as f64).sqrt().round() <= 15.0)
            .map(|(idx, _, _)| coeffs.coeffs()[idx].norm_sqr())
            .sum();
        prop_assert!((total - binned).abs() <= 1e-10 * binned);
        for s in &spectrum.shells {
            let rel = (s.shell_sum_power - s.shell_avg_power * s.mode_count as f64).abs();
            prop_assert!(rel <= 1e-12 * s.shell_sum_power.max(1e-300));
        }
    }
}
