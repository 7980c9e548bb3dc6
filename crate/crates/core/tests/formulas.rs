use ffverify::protocol::{
    competitor_costs, f_m, sample_count, sample_count_from_gap, theorem1_bounds, theorem2_bound,
};
use ffverify::CompetitorParams;
use proptest::prelude::*;

/// `⌈ln δ / ln(1 − νε)⌉` evaluated by brute force: the smallest N with
/// `(1 − νε)^N ≤ δ`.
fn brute_force_count(nu: f64, eps: f64, delta: f64) -> u64 {
    let q = 1.0 - nu * eps;
    let mut n = 0u64;
    let mut p = 1.0f64;
    while p > delta * (1.0 + 1e-12) {
        p *= q;
        n += 1;
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sample_count_is_monotone(nu in 0.01f64..1.0, eps in 0.01f64..0.5, delta in 0.001f64..0.5, k in 1.01f64..2.0) {
        let n = sample_count(nu, eps, delta).unwrap();
        prop_assert!(sample_count((nu * k).min(1.0), eps, delta).unwrap() <= n);
        prop_assert!(sample_count(nu, (eps * k).min(0.99), delta).unwrap() <= n);
        prop_assert!(sample_count(nu, eps, (delta * k).min(0.99)).unwrap() <= n);
        // The linearized count is never smaller.
        prop_assert!(sample_count_from_gap(nu, eps, delta).unwrap() >= n);
    }

    #[test]
    fn sample_count_matches_brute_force(nu in 0.05f64..1.0, eps in 0.05f64..0.5, delta in 0.01f64..0.5) {
        let n = sample_count(nu, eps, delta).unwrap();
        let b = brute_force_count(nu, eps, delta);
        prop_assert!(n.abs_diff(b) <= 1, "{n} vs {b}");
    }

    #[test]
    fn f_m_small_x(x in 1e-8f64..1e-4) {
        prop_assert!((f_m(2, x).unwrap() / (x / 2.0) - 1.0).abs() < 1e-3);
        for m in 3..6 {
            prop_assert!((f_m(m, x).unwrap() / (x / 4.0) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn f_m_is_increasing_and_bounded(x in 0.0f64..1e6, dx in 1e-6f64..10.0, m in 2usize..6) {
        let a = f_m(m, x).unwrap();
        let b = f_m(m, x + dx).unwrap();
        prop_assert!(b >= a && b < 1.0 && a >= 0.0);
        prop_assert!(f_m(2, x).unwrap() >= f_m(3, x).unwrap());
    }

    #[test]
    fn strong_bound_beats_weak(m in 2usize..6, nu_e in 0.05f64..1.0, gamma in 0.01f64..1.0, s in 0.0f64..0.99, g in 1usize..10) {
        let b = theorem1_bounds(m, nu_e, gamma, s, g).unwrap();
        prop_assert!(b.strong >= b.weak * (1.0 - 1e-12), "{b:?}");
        prop_assert!(b.strong <= nu_e / m as f64 + 1e-15);
    }

    #[test]
    fn theorem2_scales_inversely_with_edges(nu_e in 0.05f64..1.0, gamma in 0.01f64..2.0, e in 1usize..1000) {
        let a = theorem2_bound(nu_e, gamma, e);
        prop_assert!((a * e as f64 - nu_e * gamma).abs() < 1e-12);
    }

    #[test]
    fn hkse_approximation_tracks_exact(e in 10usize..10_000, delta in 1e-4f64..0.1) {
        let c = competitor_costs(&CompetitorParams {
            epsilon: 0.01,
            delta,
            gamma: 0.35,
            edges: Some(e),
            ..Default::default()
        })
        .unwrap();
        // −ln(1−δ) ≈ δ, so the logarithms differ by O(δ + 1/|E|).
        let ratio = c.hkse.unwrap() / c.hkse_approx.unwrap();
        prop_assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }
}

#[test]
fn hkse_grows_like_cube_times_log() {
    let cost = |e: usize| {
        competitor_costs(&CompetitorParams {
            epsilon: 0.01,
            delta: 0.01,
            gamma: 0.35,
            edges: Some(e),
            ..Default::default()
        })
        .unwrap()
        .hkse
        .unwrap()
    };
    let ratio = cost(100) / cost(50);
    let predicted = 8.0 * (101.0 / -(0.99f64.ln())).ln() / (51.0 / -(0.99f64.ln())).ln();
    assert!((ratio - predicted).abs() < 1e-9);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(sample_count(1.0, 0.0, 0.1).is_err());
    assert!(sample_count(1.0, 0.1, 1.0).is_err());
    assert!(sample_count(1.5, 0.1, 0.1).is_err());
    assert!(theorem1_bounds(1, 0.4, 0.35, 0.5, 2).is_err());
    assert!(theorem1_bounds(2, 0.4, 0.0, 0.5, 2).is_err());
    assert!(theorem1_bounds(2, 0.4, 0.35, 1.0, 2).is_err());
}
