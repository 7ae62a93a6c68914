use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use tbell::correlators::agreement_tolerance;
use tbell::inequalities::threshold_for_max;
use tbell::{
    born_probability, collapse, delta_k, delta_k_stationary, expectation_q, k_analytic, k_oracle,
    k_selective_analytic, maximize_violation, measured_trajectory, propagate, selection_factor,
    CorrelationRequest, DynamicsParams, InitialPhase, Outcome, Preset, QuadratureConfig,
    SearchConfig, SelectionPolicy, SolveConfig, TwoLevelState,
};

fn eps(e: f64) -> SelectionPolicy {
    SelectionPolicy::new(e).unwrap()
}

fn state() -> impl Strategy<Value = TwoLevelState> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI, 0.1f64..=1.0).prop_map(|(theta, a, b, r)| {
        TwoLevelState::new(
            Complex64::from_polar(r * theta.cos(), a),
            Complex64::from_polar(r * theta.sin(), b),
        )
    })
}

fn omega() -> impl Strategy<Value = f64> {
    0.2f64..5.0
}

proptest! {
    #[test]
    fn propagation_is_unitary(s in state(), w in omega(), dt in -20.0f64..20.0) {
        let p = DynamicsParams::new(w).unwrap();
        prop_assert!((propagate(&s, dt, &p).norm_sqr() - s.norm_sqr()).abs() <= 1e-12);
    }

    #[test]
    fn propagation_group_law(s in state(), w in omega(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let p = DynamicsParams::new(w).unwrap();
        let two = propagate(&propagate(&s, a, &p), b, &p);
        let one = propagate(&s, a + b, &p);
        prop_assert!((two.c_plus - one.c_plus).norm() <= 1e-12);
        prop_assert!((two.c_minus - one.c_minus).norm() <= 1e-12);
    }

    #[test]
    fn revival_preserves_occupation(s in state(), w in omega(), k in 1u32..6) {
        let p = DynamicsParams::new(w).unwrap();
        let after = propagate(&s, k as f64 * p.revival_time(), &p);
        prop_assert!((expectation_q(&after).unwrap() - expectation_q(&s).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn projector_algebra(s in state()) {
        for q in Outcome::BOTH {
            let c = collapse(&s, q);
            prop_assert_eq!(collapse(&c, q), c);
            prop_assert!(collapse(&c, q.flipped()).is_zero());
            let p = born_probability(&s, q).unwrap();
            prop_assert!((c.norm_sqr() - p * s.norm_sqr()).abs() <= 1e-12);
        }
        let total: f64 = Outcome::BOTH.iter().map(|&q| born_probability(&s, q).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn outcome_sequences_are_complete(
        w in omega(),
        t_prime in -3.0f64..3.0,
        gaps in prop::collection::vec(0.01f64..2.0, 1..=7),
    ) {
        let p = DynamicsParams::new(w).unwrap();
        let times: Vec<f64> = gaps.iter().scan(0.0, |t, g| { *t += g; Some(*t) }).collect();
        let n = times.len();
        let mut total = 0.0;
        for mask in 0..(1u32 << n) {
            let outcomes: Vec<Outcome> = (0..n)
                .map(|k| if mask >> k & 1 == 1 { Outcome::Minus } else { Outcome::Plus })
                .collect();
            let (rec, fin) = measured_trajectory(InitialPhase::new(t_prime), &times, &outcomes, &p).unwrap();
            let joint: f64 = rec.iter().map(|r| r.pre_probability).product();
            prop_assert!((fin.norm_sqr() - joint).abs() <= 1e-12);
            for r in &rec {
                prop_assert!((r.disturbance - (1.0 - r.pre_probability)).abs() <= 1e-12);
            }
            total += fin.norm_sqr();
        }
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn free_evolution_is_cos(w in omega(), t_prime in -3.0f64..3.0, t in -10.0f64..10.0) {
        let p = DynamicsParams::new(w).unwrap();
        let ph = InitialPhase::new(t_prime);
        let s = propagate(&TwoLevelState::plus(), t - t_prime, &p);
        let expected = (2.0 * w * (t - t_prime)).cos();
        prop_assert!((expectation_q(&s).unwrap() - expected).abs() <= 1e-12);
        let s2 = tbell::initial_state(ph, t, &p);
        prop_assert!((expectation_q(&s2).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn correlator_is_even_in_lag(w in omega(), t1 in -5.0f64..5.0, lag in 0.0f64..5.0, e in 0.0f64..=1.0) {
        let p = DynamicsParams::new(w).unwrap();
        prop_assert!((k_analytic(t1, t1 + lag, &p) - k_analytic(t1, t1 - lag, &p)).abs() <= 1e-12);
        let a = k_selective_analytic(&CorrelationRequest::new(t1, t1 + lag, p, eps(e)));
        let b = k_selective_analytic(&CorrelationRequest::new(t1 + lag, t1, p, eps(e)));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn delta_k_scales_with_selection(
        preset in prop::sample::select(Preset::ALL.to_vec()),
        gaps in prop::collection::vec(0.01f64..2.0, 3),
        e in 0.0f64..=1.0,
    ) {
        let p = DynamicsParams::new(1.3).unwrap();
        let spec = preset.spec();
        let times: Vec<f64> = std::iter::once(0.0)
            .chain(gaps.iter().scan(0.0, |t, g| { *t += g; Some(*t) }))
            .take(spec.n_times())
            .collect();
        let base = delta_k(&spec, &times, &p, &eps(0.0)).unwrap();
        let sel = delta_k(&spec, &times, &p, &eps(e)).unwrap();
        prop_assert!((sel - selection_factor(&eps(e)) * base).abs() <= 1e-12);
    }

    #[test]
    fn stationary_delta_k_has_revival_period(
        preset in prop::sample::select(Preset::ALL.to_vec()),
        w in omega(),
        phase in 0.01f64..3.0,
        k in 1u32..4,
    ) {
        let p = DynamicsParams::new(w).unwrap();
        let spec = preset.spec();
        let t = phase / w;
        let a = delta_k_stationary(&spec, t, &p, &eps(0.0)).unwrap();
        let b = delta_k_stationary(&spec, t + k as f64 * p.revival_time(), &p, &eps(0.0)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_is_stationary(lag in 0.0f64..3.0, shift in -4.0f64..4.0, e in prop::sample::select(vec![0.0, 0.2, 0.5, 0.85])) {
        let p = DynamicsParams::new(1.4).unwrap();
        let q = QuadratureConfig::default();
        let a = k_oracle(&CorrelationRequest::new(0.3, 0.3 + lag, p, eps(e)), &q);
        let b = k_oracle(&CorrelationRequest::new(0.3 + shift, 0.3 + shift + lag, p, eps(e)), &q);
        let tol = if e == 0.0 { 1e-9 } else { agreement_tolerance(e, q.n_nodes()) };
        prop_assert!((a - b).abs() <= tol, "{} vs {}", a, b);
    }
}

#[test]
fn selection_factor_strictly_decreasing() {
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    for w in grid.windows(2) {
        assert!(selection_factor(&eps(w[1])) < selection_factor(&eps(w[0])));
    }
}

#[test]
fn selection_factor_derivative_matches_finite_difference() {
    let h = 1e-6;
    for k in 0..=90 {
        let e = 0.05 + 0.01 * k as f64;
        let fd = (selection_factor(&eps(e + h)) - selection_factor(&eps(e - h))) / (2.0 * h);
        let exact = -2.0 * e / (PI * (e * (1.0 - e)).sqrt());
        assert!((fd - exact).abs() <= 1e-6, "eps = {e}: {fd} vs {exact}");
    }
}

#[test]
fn arccos_identity_has_no_branch_error() {
    for k in 0..=100 {
        let e = k as f64 / 100.0;
        let lhs = (2.0 * e - 1.0).acos();
        let rhs = 2.0 * e.sqrt().acos();
        assert!((lhs - rhs).abs() <= 1e-12, "eps = {e}");
    }
}

#[test]
fn argmax_spacing_does_not_depend_on_epsilon() {
    let p = DynamicsParams::new(1.0).unwrap();
    let search = SearchConfig::default();
    for preset in Preset::ALL {
        let spec = preset.spec();
        let reference = maximize_violation(&spec, &p, &eps(0.0), &search).argmax_spacing;
        for k in 1..=99 {
            let e = k as f64 / 100.0;
            let r = maximize_violation(&spec, &p, &eps(e), &search);
            assert!(
                (r.argmax_spacing - reference).abs() <= 1e-6,
                "{preset} eps = {e}: {} vs {reference}",
                r.argmax_spacing
            );
            assert!((r.delta_b_max - (r.a_epsilon * r.delta_k_max - spec.bound()) / spec.bound()).abs() <= 1e-12);
            assert_eq!(r.violated, r.delta_b_max > 0.0);
        }
    }
}

#[test]
fn threshold_brackets_sign_change() {
    let p = DynamicsParams::new(1.0).unwrap();
    let solve = SolveConfig::default();
    let search = SearchConfig::default();
    for preset in Preset::ALL {
        let spec = preset.spec();
        let star = tbell::epsilon_threshold(&spec, &p, &solve).unwrap();
        let below = maximize_violation(&spec, &p, &eps(star - 10.0 * solve.tol), &search);
        let above = maximize_violation(&spec, &p, &eps(star + 10.0 * solve.tol), &search);
        assert!(below.delta_b_max > 0.0, "{preset}");
        assert!(above.delta_b_max < 0.0, "{preset}");
    }
    assert_eq!(threshold_for_max(1.0, 1.0, &solve), Ok(0.0));
}

#[test]
fn no_violation_beyond_threshold_on_fine_grid() {
    let p = DynamicsParams::new(1.0).unwrap();
    for preset in Preset::ALL {
        let spec = preset.spec();
        let star = tbell::epsilon_threshold(&spec, &p, &SolveConfig::default()).unwrap();
        for e in [star + 1e-6, 0.8, 0.95] {
            for k in 1..=10_000 {
                let t = k as f64 * PI / 10_000.0;
                let v = delta_k_stationary(&spec, t, &p, &eps(e)).unwrap();
                assert!(v <= spec.bound() + 1e-9, "{preset} eps = {e} t = {t}: {v}");
            }
        }
    }
}
