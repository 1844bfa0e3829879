//! Quadrature oracles for the closed forms, used by tests and the self-test.
//! They integrate the kernel directly and share no algebra with the closed
//! forms they check.

use super::{segment_cross_energy, LightCone, ModelParams, Segment};
use crate::quadrature::{integrate, integrate_with_breaks, Tolerance};

/// `int_0^len u^(-beta) du` by quadrature after `u = len * v^m`, which turns
/// the endpoint singularity into a bounded integrand.
fn one_sided_kernel(len: f64, beta: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let m = (2.0 / (1.0 - beta)).ceil();
    let f = |v: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let u = len * v.powf(m);
        u.powf(-beta) * len * m * v.powf(m - 1.0)
    };
    integrate(f, 0.0, 1.0, Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 2000 }).value
}

/// `int_c^d |y - y'|^(-beta) dy'`.
fn kernel_mass(y: f64, c: f64, d: f64, beta: f64) -> f64 {
    if y <= c {
        one_sided_kernel(d - y, beta) - one_sided_kernel(c - y, beta)
    } else if y >= d {
        one_sided_kernel(y - c, beta) - one_sided_kernel(y - d, beta)
    } else {
        one_sided_kernel(y - c, beta) + one_sided_kernel(d - y, beta)
    }
}

/// 2-D adaptive quadrature of `|y - y'|^(-beta)` over `s1 x s2`.
pub fn segment_energy_oracle(beta: f64, s1: Segment, s2: Segment) -> f64 {
    let (a, b) = (s1.a(), s1.b());
    if a == b || s2.a() == s2.b() {
        return 0.0;
    }
    let mut pts = vec![a, b];
    for x in [s2.a(), s2.b()] {
        if x > a && x < b {
            pts.push(x);
        }
    }
    pts.sort_by(f64::total_cmp);
    integrate_with_breaks(
        |y| kernel_mass(y, s2.a(), s2.b(), beta),
        &pts,
        Tolerance { abs: 1e-12, rel: 1e-11, max_intervals: 5000 },
    )
    .value
}

/// `1/4 int E(slice_A(s), slice_B(s)) ds` by adaptive quadrature in `s`,
/// with slices read directly off the cone geometry.
pub fn field_covariance_oracle(p: &ModelParams, a: &LightCone, b: &LightCone) -> f64 {
    let hi = a.apex.t.min(b.apex.t);
    if hi <= 0.0 {
        return 0.0;
    }
    let mut pts = vec![0.0, hi];
    for band in [a.time_band, b.time_band].into_iter().flatten() {
        for e in [band.lo(), band.hi()] {
            if e > 0.0 && e < hi {
                pts.push(e);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    let f = |s: f64| match (a.banded_slice(s), b.banded_slice(s)) {
        (Some(x), Some(y)) => 0.25 * segment_cross_energy(p, x, y),
        _ => 0.0,
    };
    integrate_with_breaks(f, &pts, Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 20_000 }).value
}
