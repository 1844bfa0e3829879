mod common;

use common::{field_covariance_oracle, rel_close, segment_energy_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swe_lab::riesz::*;

#[test]
fn segment_energy_oracle_reproduces_unit_square() {
    let v = segment_energy_oracle(0.5, Segment::new(0.0, 1.0).unwrap(), Segment::new(0.0, 1.0).unwrap());
    assert!((v - 8.0 / 3.0).abs() < 1e-9, "{v}");
    let far = segment_energy_oracle(0.5, Segment::new(0.0, 1.0).unwrap(), Segment::new(2.0, 3.0).unwrap());
    assert!((far - 0.719_064_230_952_335_6).abs() < 1e-9, "{far}");
}

#[test]
fn segment_energy_matches_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for _ in 0..30 {
            let a = rng.random_range(-2.0..2.0);
            let s1 = Segment::new(a, a + rng.random_range(0.01..2.0)).unwrap();
            let c = rng.random_range(-2.0..2.0);
            let s2 = Segment::new(c, c + rng.random_range(0.01..2.0)).unwrap();
            let closed = segment_cross_energy(&p, s1, s2);
            let oracle = segment_energy_oracle(beta, s1, s2);
            assert!(rel_close(closed, oracle, 1e-8, 1e-12), "beta={beta} {s1:?} {s2:?}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn unit_variance_by_slice_quadrature() {
    let p = make_params(0.5).unwrap();
    let cone = LightCone::new(PlanePoint::from_tx(1.0, 0.0));
    let v = field_covariance_oracle(&p, &cone, &cone);
    assert!((v - 0.754_247_2).abs() < 1e-7, "{v}");
}

#[test]
fn field_covariance_matches_oracle_with_bands() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for i in 0..40 {
            let band = |rng: &mut ChaCha8Rng| -> Option<TimeBand> {
                match i % 3 {
                    0 => None,
                    1 => Some(TimeBand::new(0.0, rng.random_range(0.1..1.5)).unwrap()),
                    _ => Some(TimeBand::new(rng.random_range(0.1..1.0), f64::INFINITY).unwrap()),
                }
            };
            let a = LightCone::banded(
                PlanePoint::from_tx(rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0)),
                band(&mut rng),
            );
            let b = LightCone::banded(
                PlanePoint::from_tx(rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0)),
                band(&mut rng),
            );
            let closed = field_covariance(&p, &a, &b);
            let oracle = field_covariance_oracle(&p, &a, &b);
            assert!(rel_close(closed, oracle, 1e-8, 1e-12), "beta={beta} {a:?} {b:?}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn rectangle_formula_equals_four_point_combination() {
    let p = make_params(0.5).unwrap();
    let four = |tau: f64, tau2: f64, lam: f64, h: f64| {
        let pts = [(tau2, lam + h, 1.0), (tau, lam + h, -1.0), (tau2, lam, -1.0), (tau, lam, 1.0)];
        let mut v = 0.0;
        for &(t1, l1, w1) in &pts {
            for &(t2, l2, w2) in &pts {
                v += w1 * w2 * field_covariance(&p, &LightCone::rotated(t1, l1), &LightCone::rotated(t2, l2));
            }
        }
        v
    };
    let v1 = four(0.0, 1.0, 1.0, 0.5);
    assert!((v1 - 0.252_268_924_576_114_4).abs() < 1e-12, "{v1}");
    let v7 = four(0.0, 1.0, 7.0, 0.5);
    assert!((v1 - v7).abs() < 1e-10, "{v1} vs {v7}");
}

#[test]
fn dyadic_correlation_matches_four_cone_route_at_coarse_scales() {
    let p = make_params(0.5).unwrap();
    let (tau, lambda, q) = (1.0f64, 1.0f64, 2.0f64);
    let z = |n: i32| [(lambda + q.powi(-n), 1.0), (lambda + q.powi(-n - 1), -1.0)];
    let cov = |m: i32, n: i32| {
        let mut v = 0.0;
        for &(l1, w1) in &z(m) {
            for &(l2, w2) in &z(n) {
                v += w1 * w2 * field_covariance(&p, &LightCone::rotated(tau, l1), &LightCone::rotated(tau, l2));
            }
        }
        v
    };
    let (j, k) = (2, 6);
    let r_cones = cov(j, k) / (cov(j, j) * cov(k, k)).sqrt();
    let r = dyadic_increment_correlation(&p, tau, lambda, q, j, k).unwrap();
    assert!((r - r_cones).abs() < 1e-8, "{r} vs {r_cones}");
    let fit = fit_decay_constant(&p, tau, lambda, q, 10, 2).unwrap();
    let bound = fit.c0 * q.powf(-(k - j) as f64 * 0.25);
    assert!(r <= bound * (1.0 + 1e-12));
}

#[test]
fn dyadic_correlation_decays_monotonically() {
    let p = make_params(0.5).unwrap();
    for j in 1..6 {
        let mut prev = f64::INFINITY;
        for k in j + 2..14 {
            let r = dyadic_increment_correlation(&p, 1.0, 1.0, 2.0, j, k).unwrap();
            assert!(r < prev && r >= 0.0, "j={j} k={k}: {r} !< {prev}");
            prev = r;
        }
    }
}

#[test]
fn canonical_metric_window_is_bounded_away_from_zero_and_infinity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..1000 {
            let a = PlanePoint::from_tx(rng.random_range(1.0..2.0), rng.random_range(-1.0..1.0));
            let b = PlanePoint::from_tx(rng.random_range(1.0..2.0), rng.random_range(-1.0..1.0));
            let d = (a.t - b.t).abs() + (a.x - b.x).abs();
            let ratio = canonical_distance(&p, a, b) / d.powf((2.0 - beta) / 2.0);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        assert!(lo > 0.0 && hi.is_finite() && lo <= hi, "beta={beta}: [{lo}, {hi}]");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_covariance_is_symmetric(
        t1 in 0.0f64..3.0, x1 in -2.0f64..2.0, t2 in 0.0f64..3.0, x2 in -2.0f64..2.0, beta in 0.05f64..0.95,
    ) {
        let p = make_params(beta).unwrap();
        let a = LightCone::new(PlanePoint::from_tx(t1, x1));
        let b = LightCone::new(PlanePoint::from_tx(t2, x2));
        let ab = field_covariance(&p, &a, &b);
        let ba = field_covariance(&p, &b, &a);
        prop_assert!((ab - ba).abs() <= 1e-13 * (1.0 + ab.abs()));
        prop_assert!(ab >= -1e-15);
    }

    #[test]
    fn increment_variance_equals_three_cone_combination(
        tau in 0.0f64..3.0, lambda in 0.0f64..3.0, h in 0.0f64..2.0, beta in 0.05f64..0.95,
    ) {
        let p = make_params(beta).unwrap();
        let a = LightCone::rotated(tau, lambda);
        let b = LightCone::rotated(tau, lambda + h);
        let combo = field_covariance(&p, &a, &a) + field_covariance(&p, &b, &b) - 2.0 * field_covariance(&p, &a, &b);
        let closed = increment_variance(&p, tau, lambda, h).unwrap();
        prop_assert!((combo - closed).abs() <= 1e-10);
    }

    #[test]
    fn disjoint_time_bands_give_exactly_zero(
        t1 in 0.0f64..3.0, x1 in -2.0f64..2.0, t2 in 0.0f64..3.0, x2 in -2.0f64..2.0, tau0 in 0.01f64..3.0,
    ) {
        let p = make_params(0.5).unwrap();
        let a = LightCone::banded(PlanePoint::from_tx(t1, x1), Some(TimeBand::before(tau0).unwrap()));
        let b = LightCone::banded(PlanePoint::from_tx(t2, x2), Some(TimeBand::after(tau0).unwrap()));
        prop_assert_eq!(field_covariance(&p, &a, &b), 0.0);
    }
}
