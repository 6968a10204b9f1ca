use hls_core::exponents::{classify, integrability_thresholds, Params, Regime, VFastCase};
use proptest::prelude::*;

fn valid() -> impl Strategy<Value = (u32, f64, f64, f64)> {
    (3u32..=12).prop_flat_map(|n| (Just(n), 0.05..(n as f64 - 0.05), 0.1f64..20.0, 0.1f64..20.0)).prop_filter("pq > 1", |(_, _, p, q)| p * q > 1.0)
}

proptest! {
    #[test]
    fn integrability_exponents_match_slow_rates((n, alpha, p, q) in valid()) {
        let params = Params::<f64>::new(n, alpha, p, q).unwrap();
        let report = classify(&params);
        let nf = n as f64;
        prop_assert!((nf / report.r0 / report.slow_rate_u - 1.0).abs() < 1e-13);
        prop_assert!((nf / report.s0 / report.slow_rate_v - 1.0).abs() < 1e-13);
        let (tu, tv) = integrability_thresholds(&report, n);
        prop_assert!((tu / report.slow_rate_u - 1.0).abs() < 1e-13 && (tv / report.slow_rate_v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn orientation_is_canonical((n, alpha, p, q) in valid()) {
        let a = Params::<f64>::new(n, alpha, p, q).unwrap();
        let b = Params::<f64>::new(n, alpha, q, p).unwrap();
        prop_assert!(a.p <= a.q);
        prop_assert_eq!((a.p, a.q), (b.p, b.q));
        prop_assert_eq!(classify(&a), classify(&b));
        prop_assert_eq!(a.original_pq(), (p, q));
        prop_assert_eq!(b.original_pq(), (q, p));
        prop_assert_eq!(a.swapped, p > q);
    }

    #[test]
    fn slow_rates_sit_below_fast_rates((n, alpha, p, q) in valid()) {
        let params = Params::<f64>::new(n, alpha, p, q).unwrap();
        let report = classify(&params);
        if report.satisfies_ncc {
            let nf = n as f64;
            prop_assert!(report.slow_rate_u < nf - alpha);
            prop_assert!(report.slow_rate_v < (nf - alpha).min(params.p * nf - (params.p + 1.0) * alpha) + 1e-12);
        }
    }

    #[test]
    fn critical_closure(n in 3u32..=12, frac in 0.02f64..0.98, p in 0.3f64..15.0) {
        let nf = n as f64;
        let alpha = frac * nf;
        let rest = (nf - alpha) / nf - 1.0 / (p + 1.0);
        prop_assume!(rest > 0.01 && rest < 0.99);
        let q = 1.0 / rest - 1.0;
        prop_assume!(p * q > 1.0);
        let params = Params::<f64>::new(n, alpha, p, q).unwrap();
        let report = classify(&params);
        prop_assert_eq!(report.regime, Regime::Critical);
        prop_assert!((report.r0 - (params.p + 1.0)).abs() <= 1e-10 * (params.p + 1.0));
        prop_assert!((report.s0 - (params.q + 1.0)).abs() <= 1e-10 * (params.q + 1.0));
    }
}

#[test]
fn documented_examples() {
    let report = classify(&Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap());
    assert_eq!(report.regime, Regime::Critical);
    assert!((report.r0 - 4.0).abs() < 1e-12);
    assert_eq!(report.v_fast_case, VFastCase::Pure);

    let report = classify(&Params::<f64>::new(5, 2.0, 3.0, 3.0).unwrap());
    assert_eq!(report.regime, Regime::Supercritical);
    assert_eq!((report.slow_rate_u, report.slow_rate_v), (1.0, 1.0));

    assert_eq!(classify(&Params::<f64>::new(4, 2.0, 2.0, 5.0).unwrap()).v_fast_case, VFastCase::LogCorrected);
    assert_eq!(classify(&Params::<f64>::new(4, 2.0, 1.5, 9.0).unwrap()).v_fast_case, VFastCase::Weakened);
    assert_eq!(classify(&Params::<f64>::new(4, 2.0, 2.0, 2.0).unwrap()).regime, Regime::Subcritical);

    let k = Params::<f64>::from_order(3, 1, 3.0, 3.0).unwrap();
    assert_eq!(k.alpha, 2.0);
}

#[test]
fn standing_assumptions_are_enforced() {
    for (n, alpha, p, q) in [(2, 1.0, 3.0, 3.0), (3, 4.0, 3.0, 3.0), (3, 0.0, 3.0, 3.0), (4, 2.0, 0.5, 1.5), (4, 2.0, -1.0, 3.0)] {
        assert!(Params::<f64>::new(n, alpha, p, q).unwrap_err().is_validation(), "({n}, {alpha}, {p}, {q})");
    }
    assert!(Params::<f64>::from_order(4, 0, 3.0, 3.0).is_err());
}
