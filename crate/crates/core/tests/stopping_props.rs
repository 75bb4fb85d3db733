use adaptexp::normal;
use adaptexp::stopping::{c_exp, gamma, h, h_inverse, kaufmann_threshold};
use proptest::prelude::*;

#[test]
fn threshold_dominance_on_grid() {
    for k in [2usize, 5, 10] {
        for ni in 0..=30 {
            let n = 10f64.powf(2.0 + 6.0 * ni as f64 / 30.0).round() as u64;
            if (n as f64) < 3.0 / (k as f64 - 1.0) {
                continue;
            }
            for ti in 0..=60 {
                let t = 10f64.powf(4.0 * ti as f64 / 60.0).round() as u64;
                let lhs = kaufmann_threshold(t, 1.0 / n as f64, k).unwrap();
                let rhs = gamma(t, n, k);
                assert!(lhs <= rhs, "t={t} n={n} k={k}: {lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn c_exp_bound_on_fine_grid() {
    let mut x = 0.52;
    while x < 1e4 {
        assert!(c_exp(x).unwrap() <= x + 3.0 * (x + 2.0).ln() + 7.0, "x={x}");
        x *= 1.01;
    }
}

#[test]
fn quantile_round_trip() {
    for i in 0..=2400 {
        let e = -12.0 + 12.0 * i as f64 / 2400.0;
        for p in [10f64.powf(e), 1.0 - 10f64.powf(e)] {
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            assert!((normal::cdf(normal::quantile(p)) - p).abs() <= 1e-9, "p={p}");
        }
    }
}

proptest! {
    #[test]
    fn h_inverse_round_trip(y in 1.0f64..1e6) {
        let u = h_inverse(y).unwrap();
        prop_assert!(u >= 1.0);
        prop_assert!((h(u) - y).abs() <= 1e-9 * y);
    }

    #[test]
    fn gamma_grows_with_t_and_n(t in 1u64..100_000, n in 100u64..100_000_000, k in 2usize..20) {
        prop_assert!(gamma(t + 1, n, k) >= gamma(t, n, k));
        prop_assert!(gamma(t, n + 1, k) >= gamma(t, n, k));
    }
}
