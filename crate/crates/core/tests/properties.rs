use proptest::prelude::*;

use gompertz_ps::estimation::ObservedSample;
use gompertz_ps::gof::{information_criteria, ks_statistic_uniform, ks_test};
use gompertz_ps::simlab::{run_estimation_study, StudyConfig, StudyMethod};
use gompertz_ps::{GpsParams, PowerSeriesFamily};

fn family() -> impl Strategy<Value = (PowerSeriesFamily, f64)> {
    prop_oneof![
        (0.01..0.99f64).prop_map(|t| (PowerSeriesFamily::Geometric, t)),
        (0.01..8.0f64).prop_map(|t| (PowerSeriesFamily::Poisson, t)),
        (1u32..30, 0.01..4.0f64).prop_map(|(m, t)| (PowerSeriesFamily::Binomial { m }, t)),
        (0.01..0.99f64).prop_map(|t| (PowerSeriesFamily::Logarithmic, t)),
        (0.01..2.0f64).prop_map(|t| (PowerSeriesFamily::parse("1:1,4:0.3,9:2").unwrap(), t)),
    ]
}

fn params() -> impl Strategy<Value = GpsParams> {
    (0.05..3.0f64, 0.05..3.0f64, family()).prop_map(|(b, g, (fam, t))| GpsParams::new(b, g, t, fam).unwrap())
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_complements_survival(p in params(), a in 0.0..4.0f64, d in 0.0..2.0f64) {
        prop_assert!(p.cdf(a) <= p.cdf(a + d) + 1e-15);
        prop_assert!((p.cdf(a) + p.survival(a) - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&p.cdf(a)));
    }

    #[test]
    fn pdf_is_non_negative(p in params(), x in 0.0..10.0f64) {
        let f = p.pdf(x);
        prop_assert!(f >= 0.0 && f.is_finite());
    }

    #[test]
    fn quantile_round_trips(p in params(), u in 0.001..0.999f64) {
        let x = p.quantile(u).unwrap();
        prop_assert!(x >= 0.0);
        prop_assert!((p.cdf(x) - u).abs() < 1e-9);
    }

    #[test]
    fn extended_gg_stays_a_distribution(b in 0.05..3.0f64, g in 0.05..3.0f64, ts in 0.01..100.0f64, x in 0.0..5.0f64) {
        let p = GpsParams::extended_gg(b, g, ts).unwrap();
        prop_assert!(p.pdf(x) >= 0.0);
        prop_assert!((p.cdf(x) + p.survival(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_depends_only_on_probability_transform(p in params(), seed in 0u64..1000) {
        let data = ObservedSample::new(p.sample_seeded(40, seed)).unwrap();
        let mut u: Vec<f64> = data.values().iter().map(|&x| p.cdf(x)).collect();
        u.reverse();
        let ks = ks_test(&p, &data);
        prop_assert!((ks.statistic - ks_statistic_uniform(&u)).abs() < 1e-15);
        prop_assert!(ks.statistic > 0.0 && ks.statistic <= 1.0);
        prop_assert!((0.0..=1.0).contains(&ks.p_value));
    }

    #[test]
    fn information_criteria_arithmetic(ll in -500.0..500.0f64, k in 0usize..6, n in 1usize..500) {
        let ic = information_criteria(ll, k, n);
        prop_assert!((ic.aic - (-2.0 * ll + 2.0 * k as f64)).abs() < 1e-9);
        prop_assert!((ic.bic - ic.aic - k as f64 * ((n as f64).ln() - 2.0)).abs() < 1e-9);
        match ic.aicc {
            Some(v) => prop_assert!(n > k + 1 && v >= ic.aic),
            None => prop_assert!(n <= k + 1),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mse_splits_into_variance_and_bias(seed in 0u64..10_000, theta in 0.2..0.8f64) {
        let cfg = StudyConfig {
            params: vec![[0.5, 2.0, theta]],
            sample_sizes: vec![40],
            replicates: 8,
            method: StudyMethod::Direct,
            seed,
            ..Default::default()
        };
        let report = run_estimation_study(&cfg).unwrap();
        let cell = &report.cells[0];
        let m = cell.estimation.as_ref().unwrap();
        for j in 0..3 {
            let bias = m.ae[j] - cell.truth[j];
            prop_assert!((m.mse[j] - m.vs[j] - bias * bias).abs() <= 1e-9 * m.mse[j].max(1.0));
            prop_assert!((0.0..=1.0).contains(&m.cp[j]));
        }
    }
}
