use nevrand::experiments::records::fmt_f64;
use nevrand::functionals::{count_zeros_argument, counting_n, find_zeros, jensen_residual, log_leading_coefficient, sigma_omega_integral, sigma_omega_parseval, with_radius_jitter};
use nevrand::quadrature::QuadratureSpec;
use nevrand::random::sample_function;
use nevrand::series::{log_sigma, CoefficientSequence, TruncationPolicy};
use nevrand::stats::{ks_statistic, quantile};
use nevrand::{ExperimentConfig, RandomModel, TruncatedSample};
use num_complex::Complex64;
use proptest::prelude::*;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn model() -> impl Strategy<Value = RandomModel> {
    prop_oneof![Just(RandomModel::Gaussian), Just(RandomModel::Rademacher), Just(RandomModel::Steinhaus)]
}

fn sample() -> impl Strategy<Value = TruncatedSample> {
    (model(), 1usize..=40, any::<u64>(), 0u64..1000)
        .prop_map(|(m, n, seed, trial)| sample_function(&CoefficientSequence::exponential(), m, n, seed, trial))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jensen_identity(s in sample(), r in 0.5f64..12.0) {
        let spec = QuadratureSpec::default();
        let (residual, _) = with_radius_jitter(r, |rr| jensen_residual(&s, rr, &spec)).unwrap();
        prop_assert!(residual <= 1e-7, "residual {residual}");
    }

    #[test]
    fn argument_count_matches_roots(s in sample(), r in 0.5f64..12.0) {
        let spec = QuadratureSpec::default();
        let ((winding, found), _) = with_radius_jitter(r, |rr| {
            Ok((count_zeros_argument(&s, rr, ZERO, &spec)?, find_zeros(&s, ZERO, rr)?.count_within(rr)))
        }).unwrap();
        prop_assert_eq!(winding, found);
    }

    #[test]
    fn parseval_matches_integral(s in sample(), r in 0.5f64..20.0) {
        let coef = sigma_omega_parseval(&s, r).unwrap();
        let integral = sigma_omega_integral(&s, r).unwrap();
        prop_assert!(((coef - integral) / coef).abs() <= 1e-10);
    }

    #[test]
    fn doubling_shifts_log_terms_only(s in sample(), r in 1.0f64..10.0) {
        let doubled = s.scaled(2.0);
        let n = with_radius_jitter(r, |rr| counting_n(&find_zeros(&s, ZERO, rr)?, rr)).unwrap();
        let n2 = counting_n(&find_zeros(&doubled, ZERO, n.1).unwrap(), n.1).unwrap();
        prop_assert!((n.0 - n2).abs() <= 1e-9);
        let c0 = log_leading_coefficient(&s).unwrap();
        let c0_2 = log_leading_coefficient(&doubled).unwrap();
        prop_assert!((c0_2 - c0 - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn degree_extension_keeps_prefix(m in model(), seed in any::<u64>(), trial in 0u64..1000, n in 1usize..50, extra in 1usize..50) {
        let base = CoefficientSequence::exponential();
        let short = sample_function(&base, m, n, seed, trial);
        let long = sample_function(&base, m, n + extra, seed, trial);
        prop_assert_eq!(&long.coefficients[..=n], &short.coefficients[..]);
    }

    #[test]
    fn log_sigma_of_doubled_base(r in 0.5f64..30.0) {
        let policy = TruncationPolicy::default();
        let base = CoefficientSequence::exponential();
        let doubled = CoefficientSequence::explicit(base.truncate(120).into_iter().map(|c| c * 2.0));
        let shift = log_sigma(&doubled, r, &policy).unwrap() - log_sigma(&base, r, &policy).unwrap();
        prop_assert!((shift - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn fmt_f64_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn quantiles_are_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..200), q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (a, b) = (quantile(&values, lo), quantile(&values, hi));
        prop_assert!(min <= a && a <= b && b <= max);
    }

    #[test]
    fn ks_statistic_is_a_distance(values in prop::collection::vec(-5f64..5.0, 1..200)) {
        let d = ks_statistic(&values, |x| 1.0 / (1.0 + (-x).exp()));
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn config_toml_round_trips(seed in any::<u64>(), trials in 1usize..10_000, c in 1.01f64..3.0, a in 0.01f64..2.0, r0 in 1.0f64..10.0) {
        let text = format!(
            "seed = {seed}\ntrials = {trials}\nradii = [{r0}, {}]\nmodel = \"steinhaus\"\ntarget_values = [[1.0, -2.5]]\n\
             [base]\nkind = \"geometric-factorial\"\nc = 1.5\ns = 0.75\n[constants]\nA = {a}\nB = 1.0\nC = {c}\n",
            r0 * 2.0
        );
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let again = ExperimentConfig::from_toml_str(&config.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(again, config);
    }
}
