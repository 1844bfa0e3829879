use serde::Serialize;

use super::geometry::{LightCone, PlanePoint, Segment, TimeBand};
use super::region::{region_covariance, Region};
use super::ModelParams;
use crate::error::{LabError, Result};
use crate::exec;

/// `int int 1_{s1}(y) |y - y'|^(-beta) 1_{s2}(y') dy dy'`.
pub fn segment_cross_energy(p: &ModelParams, s1: Segment, s2: Segment) -> f64 {
    let e = p.exponent();
    let g = |z: f64| z.abs().powf(e);
    let (a, b, c, d) = (s1.a(), s1.b(), s2.a(), s2.b());
    (g(c - b) + g(d - a) - g(c - a) - g(d - b)) / (e * (e - 1.0))
}

/// `Cov(W(A) / 2, W(B) / 2)` for two (banded) light cones.
pub fn field_covariance(p: &ModelParams, a: &LightCone, b: &LightCone) -> f64 {
    region_covariance(p, &Region::cone(a), &Region::cone(b))
}

fn require_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Domain(format!("{name} must be a finite value >= 0, got {v}")))
    }
}

/// `E[(u~(tau, lambda + h) - u~(tau, lambda))^2]`.
pub fn increment_variance(p: &ModelParams, tau: f64, lambda: f64, h: f64) -> Result<f64> {
    require_nonneg("tau", tau)?;
    require_nonneg("lambda", lambda)?;
    require_nonneg("h", h)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let e = p.exponent();
    Ok(0.5 * p.k_beta_sq() * ((tau + lambda) * h.powf(e) + h.powf(e + 1.0) / (3.0 - p.beta())))
}

/// Variance of the rectangular increment of `u~` over
/// `(tau, tau2] x (lambda, lambda + h]`, valid while `h <= tau2 - tau`.
pub fn rectangle_increment_variance(p: &ModelParams, tau: f64, tau2: f64, lambda: f64, h: f64) -> Result<f64> {
    require_nonneg("tau", tau)?;
    require_nonneg("lambda", lambda)?;
    require_nonneg("h", h)?;
    if !(tau2 > tau) {
        return Err(LabError::Precondition(format!("rectangle needs tau < tau2, got {tau} >= {tau2}")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    let width = tau2 - tau;
    if h > width {
        return Err(LabError::Precondition(format!(
            "closed form holds for h <= tau2 - tau = {width}, got h = {h}; use the four-point combination"
        )));
    }
    let beta = p.beta();
    Ok(0.5 * p.k_beta_sq() * h.powf(p.exponent()) * (width - (1.0 - beta) / (3.0 - beta) * h))
}

/// Region of `Z_n = u~(tau, lambda + q^-n) - u~(tau, lambda + q^-(n+1))`,
/// expressed in coordinates shifted by `lambda` so that fine scales keep
/// full relative precision.
fn dyadic_region(tau: f64, lambda: f64, q: f64, n: i32) -> Region {
    Region::rotated_box(None, tau + lambda, Some(q.powi(-n - 1)), q.powi(-n), None)
}

fn check_dyadic(tau: f64, lambda: f64, q: f64, j: i32, k: i32) -> Result<()> {
    require_nonneg("tau", tau)?;
    require_nonneg("lambda", lambda)?;
    if !(q > 1.0) {
        return Err(LabError::Domain(format!("q must exceed 1, got {q}")));
    }
    if j < 1 || k < j {
        return Err(LabError::Domain(format!("need 1 <= j <= k, got j = {j}, k = {k}")));
    }
    Ok(())
}

/// Exact `Cov(Z_j, Z_k)` of the (unnormalized) dyadic increments.
pub fn dyadic_increment_covariance(p: &ModelParams, tau: f64, lambda: f64, q: f64, j: i32, k: i32) -> Result<f64> {
    check_dyadic(tau, lambda, q, j, k)?;
    Ok(region_covariance(p, &dyadic_region(tau, lambda, q, j), &dyadic_region(tau, lambda, q, k)))
}

/// Correlation of the dyadic increments `Z_j` and `Z_k`; 1 when `j == k`.
pub fn dyadic_increment_correlation(p: &ModelParams, tau: f64, lambda: f64, q: f64, j: i32, k: i32) -> Result<f64> {
    check_dyadic(tau, lambda, q, j, k)?;
    if j == k {
        return Ok(1.0);
    }
    let (rj, rk) = (dyadic_region(tau, lambda, q, j), dyadic_region(tau, lambda, q, k));
    let cov = region_covariance(p, &rj, &rk);
    let vj = region_covariance(p, &rj, &rj);
    let vk = region_covariance(p, &rk, &rk);
    Ok(cov / (vj * vk).sqrt())
}

/// Result of fitting `r_jk <= C0 q^(-(k - j) beta / 2)` over a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub beta: f64,
    pub q: f64,
    pub tau: f64,
    pub lambda: f64,
    pub k_max: i32,
    pub min_gap: i32,
    pub c0: f64,
    pub pairs: usize,
    pub min_correlation: f64,
    pub max_correlation: f64,
    /// Largest `r_jk / (C0 q^(-(k-j) beta/2))`; at most 1 by construction of C0.
    pub max_bound_ratio: f64,
    /// Number of `(j, k)` with `r_{j,k+1} >= r_{j,k}` among pairs with `j <= k - min_gap`.
    pub monotonicity_violations: usize,
}

/// Fits the decay constant over all `1 <= j <= k - min_gap`, `k <= k_max`.
pub fn fit_decay_constant(
    p: &ModelParams,
    tau: f64,
    lambda: f64,
    q: f64,
    k_max: i32,
    min_gap: i32,
) -> Result<DecayFit> {
    let pairs: Vec<(i32, i32)> = (1..=k_max).flat_map(|k| (1..=k - min_gap).map(move |j| (j, k))).collect();
    let values = exec::map_slice(&pairs, |&(j, k)| dyadic_increment_correlation(p, tau, lambda, q, j, k));
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let half_beta = p.beta() / 2.0;
    let bound = |j: i32, k: i32| q.powf(-(k - j) as f64 * half_beta);
    let c0 = pairs.iter().zip(&values).map(|(&(j, k), &r)| r / bound(j, k)).fold(0.0, f64::max);
    let max_bound_ratio = pairs.iter().zip(&values).map(|(&(j, k), &r)| r / (c0 * bound(j, k))).fold(0.0, f64::max);
    let lookup = |j: i32, k: i32| pairs.iter().position(|&pk| pk == (j, k)).map(|i| values[i]);
    let mut violations = 0;
    for &(j, k) in &pairs {
        if let (Some(a), Some(b)) = (lookup(j, k), lookup(j, k + 1)) {
            if b >= a {
                violations += 1;
            }
        }
    }
    Ok(DecayFit {
        beta: p.beta(),
        q,
        tau,
        lambda,
        k_max,
        min_gap,
        c0,
        pairs: pairs.len(),
        min_correlation: values.iter().copied().fold(f64::INFINITY, f64::min),
        max_correlation: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_bound_ratio,
        monotonicity_violations: violations,
    })
}

/// Closed-form covariance of the cross-section `v~1(tau0, .)`, the part of
/// `u~(tau0, .) - u~(tau0, 0)` driven by noise before time `tau0 / sqrt 2`.
pub fn v1_crosssection_covariance(p: &ModelParams, tau0: f64, lambda: f64, lambda2: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(LabError::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    require_nonneg("lambda", lambda)?;
    require_nonneg("lambda2", lambda2)?;
    let e = p.exponent();
    let beta = p.beta();
    let scale = 2f64.powf(-(3.0 + beta) / 2.0) * tau0 / ((2.0 - beta) * (1.0 - beta));
    Ok(scale * (lambda.powf(e) + lambda2.powf(e) - (lambda - lambda2).abs().powf(e)))
}

/// Region carrying `v~1(tau0, lambda)`.
pub fn v1_region(tau0: f64, lambda: f64) -> Result<Region> {
    Ok(Region::rotated_box(None, tau0, Some(0.0), lambda, Some(TimeBand::before(tau0)?)))
}

/// Dense covariance matrix over a list of cones, assembled in parallel.
pub fn covariance_matrix(p: &ModelParams, cones: &[LightCone]) -> Vec<Vec<f64>> {
    let regions: Vec<Region> = cones.iter().map(Region::cone).collect();
    let n = regions.len();
    let rows =
        exec::map_range(n, |i| (0..=i).map(|j| region_covariance(p, &regions[i], &regions[j])).collect::<Vec<f64>>());
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Max entrywise difference between the covariance of
/// `{u~2(tau0 + tau, lambda)}` and that of `{u~(tau, lambda)}` on `grid`.
pub fn shift_invariance_residual(p: &ModelParams, tau0: f64, grid: &[(f64, f64)]) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(LabError::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    for &(tau, lambda) in grid {
        require_nonneg("tau", tau)?;
        require_nonneg("lambda", lambda)?;
    }
    let band = Some(TimeBand::after(tau0)?);
    let shifted: Vec<LightCone> = grid
        .iter()
        .map(|&(tau, lambda)| LightCone::banded(PlanePoint::from_rotated(tau0 + tau, lambda), band))
        .collect();
    let plain: Vec<LightCone> = grid.iter().map(|&(tau, lambda)| LightCone::rotated(tau, lambda)).collect();
    let a = covariance_matrix(p, &shifted);
    let b = covariance_matrix(p, &plain);
    Ok(a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Canonical distance `E[(u(t, x) - u(t', x'))^2]^(1/2)`.
pub fn canonical_distance(p: &ModelParams, a: PlanePoint, b: PlanePoint) -> f64 {
    let (ca, cb) = (Region::cone(&LightCone::new(a)), Region::cone(&LightCone::new(b)));
    let var = region_covariance(p, &ca, &ca) + region_covariance(p, &cb, &cb) - 2.0 * region_covariance(p, &ca, &cb);
    var.max(0.0).sqrt()
}
