use igabem::quadrature::DctMap;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn dct_map_invariants(y in -1.0f64..=1.0, alpha in 0.0f64..=1.0) {
        let q = DctMap::new(y, alpha).unwrap();
        prop_assert!((q.eval(-1.0) + 1.0).abs() <= 1e-12);
        prop_assert!((q.eval(1.0) - 1.0).abs() <= 1e-12);
        let mut prev = q.eval(-1.0);
        for k in 1..1000 {
            let v = q.eval(-1.0 + 2.0 * k as f64 / 999.0);
            prop_assert!(v >= prev - 1e-15, "not monotone at {k}: {prev} > {v}");
            prev = v;
        }
        prop_assert!((q.eval(q.s_alpha) - y).abs() <= 1e-12);
    }

    #[test]
    fn telles_conditions_at_alpha_zero(y in -1.0f64..=1.0) {
        let q = DctMap::new(y, 0.0).unwrap();
        let s = q.s_alpha;
        prop_assert!((q.eval(s) - y).abs() <= 1e-12);
        prop_assert!(q.derivative(s).abs() <= 1e-12);
        prop_assert!(q.second_derivative(s).abs() <= 1e-12);
    }

    #[test]
    fn identity_at_alpha_one(y in -1.0f64..=1.0, s in -1.0f64..=1.0) {
        let q = DctMap::new(y, 1.0).unwrap();
        prop_assert!((q.eval(s) - s).abs() <= 1e-12);
        prop_assert!((q.derivative(s) - 1.0).abs() <= 1e-12);
    }
}
