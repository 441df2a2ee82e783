use esn_core::laws::{self, TestFunction};
use esn_core::TailMeasure;
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = TailMeasure> {
    prop_oneof![
        (0.2f64..2.0, 0.5f64..2.0).prop_map(|(c, l)| TailMeasure::exponential(c, l).unwrap()),
        (0.1f64..2.0, 0.3f64..2.5).prop_map(|(c, a)| TailMeasure::power_law(c, a).unwrap()),
        Just(TailMeasure::log_cutout()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cdf_is_monotone_in_level(
        m in measure_strategy(),
        b in -1.0f64..2.0,
        x in 0.0f64..3.0,
        t in 0.01f64..4.0,
        u in 0.0f64..5.0,
        du in 0.0f64..2.0,
    ) {
        let lo = laws::cdf(x, t, u, b, &m).unwrap();
        let hi = laws::cdf(x, t, u + du, b, &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo);
    }

    #[test]
    fn cdf_decreases_with_start(
        m in measure_strategy(),
        b in 0.0f64..2.0,
        x in 0.0f64..3.0,
        dx in 0.0f64..2.0,
        t in 0.01f64..4.0,
        u in 0.0f64..5.0,
    ) {
        let near = laws::cdf(x, t, u, b, &m).unwrap();
        let far = laws::cdf(x + dx, t, u, b, &m).unwrap();
        prop_assert!(far <= near);
    }

    #[test]
    fn single_time_fdd_is_the_marginal(
        m in measure_strategy(),
        b in 0.0f64..2.0,
        t in 0.01f64..4.0,
        u in 0.01f64..5.0,
    ) {
        let a = laws::fdd(&[t], &[u], b, &m).unwrap();
        let c = laws::cdf(0.0, t, u, b, &m).unwrap();
        prop_assert_eq!(a, c);
    }

    #[test]
    fn adding_constraints_lowers_fdd(
        m in measure_strategy(),
        b in 0.0f64..2.0,
        t1 in 0.01f64..2.0,
        dt in 0.01f64..2.0,
        u1 in 0.01f64..3.0,
        u2 in 0.01f64..3.0,
    ) {
        let t2 = t1 + dt;
        let both = laws::fdd(&[t1, t2], &[u1, u2], b, &m).unwrap();
        let first = laws::fdd(&[t1], &[u1], b, &m).unwrap();
        let second = laws::fdd(&[t2], &[u2], b, &m).unwrap();
        prop_assert!(both <= first + 1e-14);
        prop_assert!(both <= second + 1e-14);
        // positive association of extremal processes
        prop_assert!(both >= first * second - 1e-14);
    }

    #[test]
    fn stationary_law_dominates_finite_time_law_from_zero(
        c in 0.2f64..2.0,
        l in 0.5f64..2.0,
        b in 0.1f64..2.0,
        t in 0.01f64..4.0,
        u in 0.0f64..5.0,
    ) {
        let m = TailMeasure::exponential(c, l).unwrap();
        let pi = laws::stationary_cdf(u, b, &m).unwrap();
        let f = laws::cdf(0.0, t, u, b, &m).unwrap();
        prop_assert!(pi <= f + 1e-14);
    }

    #[test]
    fn semigroup_preserves_constants(
        m in measure_strategy(),
        b in 0.0f64..2.0,
        x in 0.0f64..3.0,
        t in 0.01f64..3.0,
        k in -5.0f64..5.0,
    ) {
        let f = TestFunction::constant(k);
        let v = laws::semigroup_apply(&f, x, t, b, &m).unwrap().value;
        prop_assert!((v - k).abs() <= 1e-12 * k.abs().max(1.0));
    }
}

#[test]
fn exponential_marginal_matches_hand_integral() {
    // µ̄(y) = e^{-y}, b = 1: ∫_u^{u+t} µ̄ = e^{-u}(1 - e^{-t})
    let m = TailMeasure::exponential(1.0, 1.0).unwrap();
    for &(t, u) in &[(0.5f64, 0.1f64), (1.0, 0.0), (2.0, 1.3), (5.0, 0.4)] {
        let oracle: f64 = (-(-u).exp() * (1.0 - (-t).exp())).exp();
        let v = laws::cdf(0.0, t, u, 1.0, &m).unwrap();
        assert!((v - oracle).abs() < 1e-13, "t={t} u={u}: {v} vs {oracle}");
    }
}

#[test]
fn drift_free_marginal_is_poisson_void_probability() {
    // b = 0: P(M_t ≤ u) = exp(-t µ̄(u+))
    let m = TailMeasure::exponential(2.0, 1.5).unwrap();
    for &(t, u) in &[(0.3f64, 0.2f64), (1.0, 1.0), (4.0, 2.5)] {
        let oracle: f64 = (-t * 2.0 * (-1.5 * u).exp()).exp();
        let v = laws::cdf(0.0, t, u, 0.0, &m).unwrap();
        assert!((v - oracle).abs() < 1e-13, "{v} vs {oracle}");
    }
}

#[test]
fn marginal_below_drift_line_is_zero() {
    let m = TailMeasure::exponential(1.0, 1.0).unwrap();
    assert_eq!(laws::cdf(3.0, 1.0, 1.5, 1.0, &m).unwrap(), 0.0);
    assert!(laws::cdf(3.0, 1.0, 2.0, 1.0, &m).unwrap() > 0.0);
}

#[test]
fn generator_of_constant_is_zero() {
    let m = TailMeasure::power_law(0.7, 1.2).unwrap();
    let g = laws::generator_apply(&TestFunction::constant(3.0), 0.5, 1.0, &m).unwrap();
    assert_eq!(g.value, 0.0);
}

#[test]
fn generator_matches_hand_integral_for_pure_drift() {
    // no jumps: A f = -b f'
    let m = TailMeasure::zero();
    let f = TestFunction::gaussian();
    for &x in &[0.3, 1.0, 2.0] {
        let g = laws::generator_apply(&f, x, 1.5, &m).unwrap().value;
        let oracle = -1.5 * f.derivative(x);
        assert!((g - oracle).abs() < 1e-12, "{g} vs {oracle}");
    }
}

#[test]
fn stationary_law_is_the_long_time_limit() {
    let m = TailMeasure::exponential(1.0, 1.0).unwrap();
    for &x in &[0.0, 1.0, 3.0] {
        for &u in &[0.0, 0.5, 1.0, 2.0, 5.0] {
            let pi = laws::stationary_cdf(u, 1.0, &m).unwrap();
            let f = laws::cdf(x, 50.0, u, 1.0, &m).unwrap();
            assert!((pi - f).abs() < 1e-6, "x={x} u={u}: {f} vs {pi}");
        }
    }
}
