//! Scalar Gaussian identities: tail bounds, bivariate orthant probabilities,
//! the Slepian derivative identity and a large-deviation probe.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec;
use crate::quadrature::{integrate_with_breaks, Tolerance};
use crate::sampler::{standard_normals, CovMatrix};

/// Central finite-difference step used by every identity check.
pub const FD_STEP: f64 = 1e-4;
/// Allowed deviation of a finite-difference derivative from its closed form.
pub const FD_TOL: f64 = 1e-5;
/// Allowed residual of the mean-value bisection.
pub const BISECTION_TOL: f64 = 1e-9;
/// Beyond this many standard deviations the normal density underflows.
const TAIL_CUTOFF: f64 = 40.0;

/// `P(Z > x)` for a standard normal `Z`.
pub fn gaussian_survival(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Lower tail estimate `(2 sqrt(2 pi))^-1 x^-1 exp(-x^2 / 2)`, valid for `x > 1`.
pub fn tail_lower_bound(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * (2.0 * PI).sqrt() * x)
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard bivariate normal density with correlation `r`.
pub fn bivariate_density(x: f64, y: f64, r: f64) -> f64 {
    let det = 1.0 - r * r;
    (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * det)).exp() / (2.0 * PI * det.sqrt())
}

fn check_corr(r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(LabError::Domain(format!("correlation must satisfy |r| < 1, got {r}")));
    }
    Ok(())
}

/// `P(Z1 > g1, Z2 > g2)` with `corr(Z1, Z2) = r`, by conditioning on `Z1`.
pub fn bivariate_upper_orthant(g1: f64, g2: f64, r: f64) -> Result<f64> {
    check_corr(r)?;
    if r == 0.0 {
        return Ok(gaussian_survival(g1) * gaussian_survival(g2));
    }
    if g1 >= TAIL_CUTOFF {
        return Ok(0.0);
    }
    // mass of Z1 outside [-TAIL_CUTOFF, TAIL_CUTOFF] is below f64 resolution
    let (lo, hi) = (g1.max(-TAIL_CUTOFF), TAIL_CUTOFF);
    let s = (1.0 - r * r).sqrt();
    let mut breaks = vec![lo, hi];
    // the conditional survival switches from ~0 to ~1 around x = g2 / r
    for b in [0.0, g2 / r] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let q = integrate_with_breaks(
        |x| normal_density(x) * gaussian_survival((g2 - r * x) / s),
        &breaks,
        Tolerance { abs: 1e-14, rel: 1e-13, max_intervals: 5000 },
    );
    Ok(q.value)
}

/// One named check: inputs, observed deviation and its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityRecord {
    pub fn new(name: impl Into<String>, inputs: &[(&str, f64)], deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlepianReport {
    pub g1: f64,
    pub g2: f64,
    pub r: f64,
    /// Central difference of the orthant probability in `r`.
    pub derivative_fd: f64,
    pub density: f64,
    pub derivative: IdentityRecord,
    /// `r*` between 0 and `r` with `p(r) - p(0) = r g(g1, g2; r*)`, if bracketed.
    pub r_star: Option<f64>,
    pub mean_value: IdentityRecord,
}

impl SlepianReport {
    pub fn pass(&self) -> bool {
        self.derivative.pass && self.mean_value.pass
    }
}

/// Checks `d/dr P(Z1 > g1, Z2 > g2) = g(g1, g2; r)` by finite differences and
/// locates the mean-value point `r*` by bisection.
pub fn slepian_identity_check(g1: f64, g2: f64, r: f64) -> Result<SlepianReport> {
    if !(r.abs() < 0.99) {
        return Err(LabError::Domain(format!("slepian check needs |r| < 0.99, got {r}")));
    }
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(LabError::Domain(format!("slepian check needs positive levels, got ({g1}, {g2})")));
    }
    let inputs = [("g1", g1), ("g2", g2), ("r", r)];
    let p = |rho: f64| bivariate_upper_orthant(g1, g2, rho);
    let derivative_fd = (p(r + FD_STEP)? - p(r - FD_STEP)?) / (2.0 * FD_STEP);
    let density = bivariate_density(g1, g2, r);
    let derivative = IdentityRecord::new("orthant_derivative", &inputs, (derivative_fd - density).abs(), FD_TOL);

    let gap = p(r)? - p(0.0)?;
    let (r_star, residual) = if r == 0.0 {
        (Some(0.0), gap.abs())
    } else {
        let f = |s: f64| r * bivariate_density(g1, g2, s) - gap;
        match bisect_scan(f, 0.0, r, 64) {
            Some(s) => (Some(s), f(s).abs()),
            None => (None, f64::INFINITY),
        }
    };
    let mean_value = IdentityRecord::new("mean_value_point", &inputs, residual, BISECTION_TOL);
    Ok(SlepianReport { g1, g2, r, derivative_fd, density, derivative, r_star, mean_value })
}

/// Root of `f` between `a` and `b`: scans `pieces` sub-intervals for a sign
/// change, then bisects it to machine precision.
fn bisect_scan<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> Option<f64> {
    let mut prev = (a, f(a));
    if prev.1 == 0.0 {
        return Some(a);
    }
    for i in 1..=pieces {
        let x = a + (b - a) * i as f64 / pieces as f64;
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() != prev.1.signum() {
            let (mut lo, mut flo, mut hi) = (prev.0, prev.1, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    return Some(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Some(if f(lo).abs() <= f(hi).abs() { lo } else { hi });
        }
        prev = (x, fx);
    }
    None
}

/// Density-level form of the identity: `d/dr g = d^2/dx dy g`, both sides
/// by central differences with step [`FD_STEP`].
pub fn density_identity_check(x: f64, y: f64, r: f64) -> Result<IdentityRecord> {
    check_corr(r)?;
    if !((r + FD_STEP).abs() < 1.0 && (r - FD_STEP).abs() < 1.0) {
        return Err(LabError::Domain(format!("r = {r} too close to +-1 for the difference step")));
    }
    let h = FD_STEP;
    let dr = (bivariate_density(x, y, r + h) - bivariate_density(x, y, r - h)) / (2.0 * h);
    let dxy =
        (bivariate_density(x + h, y + h, r) - bivariate_density(x + h, y - h, r) - bivariate_density(x - h, y + h, r)
            + bivariate_density(x - h, y - h, r))
            / (4.0 * h * h);
    Ok(IdentityRecord::new("density_mixed_derivative", &[("x", x), ("y", y), ("r", r)], (dr - dxy).abs(), FD_TOL))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub gamma: f64,
    pub exceedances: u64,
    pub probability: f64,
    /// `gamma^-2 log P(sup |Z| > gamma)`; `None` when nothing exceeded.
    pub rate: Option<f64>,
    /// Binomial standard error of `rate` (delta method).
    pub rate_se: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub limit: f64,
    pub max_variance: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub entries: Vec<RateEntry>,
    /// Distance to the limit shrinks along the unflagged entries, allowing
    /// two standard errors of slack.
    pub monotone_toward_limit: bool,
}

/// Monte Carlo estimate of `gamma^-2 log P(sup_t |Z(t)| > gamma)` for the
/// Gaussian vector of a factorized covariance.
pub fn large_deviation_rate_probe(m: &CovMatrix, gammas: &[f64], seed: u64, n_reps: usize) -> Result<RateReport> {
    let l = m.factor().ok_or_else(|| LabError::Precondition("matrix is not factorized".into()))?;
    if gammas.windows(2).any(|w| w[1] <= w[0]) || gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(LabError::Domain("gammas must be positive and increasing".into()));
    }
    let max_variance = m.max_diag();
    if !(max_variance > 0.0) {
        return Err(LabError::Domain("covariance has no positive variance".into()));
    }
    let dim = m.dim();
    let sups = exec::map_range(n_reps, |rep| {
        let z = standard_normals(seed, rep as u64, dim);
        (0..dim).map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>().abs()).fold(0.0, f64::max)
    });
    let entries: Vec<RateEntry> = gammas
        .iter()
        .map(|&gamma| {
            let exceedances = sups.iter().filter(|&&s| s > gamma).count() as u64;
            let prob = exceedances as f64 / n_reps as f64;
            let (rate, rate_se) = if exceedances == 0 {
                (None, None)
            } else {
                let se_log = ((1.0 - prob) / (exceedances as f64)).sqrt();
                (Some(prob.ln() / (gamma * gamma)), Some(se_log / (gamma * gamma)))
            };
            RateEntry { gamma, exceedances, probability: prob, rate, rate_se, flagged: exceedances == 0 }
        })
        .collect();
    let limit = -1.0 / (2.0 * max_variance);
    let kept: Vec<&RateEntry> = entries.iter().filter(|e| !e.flagged).collect();
    let monotone_toward_limit = kept.windows(2).all(|w| {
        let (a, b) = (w[0].rate.unwrap(), w[1].rate.unwrap());
        let slack = 2.0 * (w[0].rate_se.unwrap() + w[1].rate_se.unwrap());
        (b - limit).abs() <= (a - limit).abs() + slack
    });
    Ok(RateReport { limit, max_variance, n_reps, seed, entries, monotone_toward_limit })
}

/// Exact `gamma^-2 log P(|Z| > gamma)` for a centred normal of variance `var`.
pub fn scalar_rate(gamma: f64, var: f64) -> f64 {
    (2.0 * gaussian_survival(gamma / var.sqrt())).ln() / (gamma * gamma)
}
