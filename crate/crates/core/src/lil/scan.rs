//! Per-scale oscillation statistics along the lambda direction.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::riesz::ModelParams;
use crate::sampler::FieldSample;

/// Largest scale for which `log log (1 / h) >= 1`, namely `e^-e`.
pub fn loglog_guard() -> f64 {
    (-std::f64::consts::E).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationRecord {
    pub tau: f64,
    pub lambda: f64,
    pub n: i32,
    pub h: f64,
    /// Signed increment `u(tau, lambda + h) - u(tau, lambda)`.
    pub raw_increment: f64,
    /// `|raw| / sqrt((tau + lambda) h^p log log(1/h))`.
    pub lil_statistic: f64,
    /// `|raw| / sqrt(h^p log(1/h))`.
    pub mod_statistic: f64,
}

/// `sqrt(h^p log log(1/h))`.
pub fn lil_normalizer(p: &ModelParams, h: f64) -> f64 {
    (h.powf(p.exponent()) * (1.0 / h).ln().ln()).sqrt()
}

/// `sqrt(h^p log(1/h))`.
pub fn mod_normalizer(p: &ModelParams, h: f64) -> f64 {
    (h.powf(p.exponent()) * (1.0 / h).ln()).sqrt()
}

/// Inclusive range of scale indices `n` with `h = q^-n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleRange {
    pub n_min: i32,
    pub n_max: i32,
}

impl ScaleRange {
    pub fn new(n_min: i32, n_max: i32) -> Result<Self> {
        if n_min > n_max || n_min < 0 {
            return Err(LabError::Domain(format!("scale range [{n_min}, {n_max}] is empty or negative")));
        }
        Ok(Self { n_min, n_max })
    }

    /// Raises `n_min` to the first index with `q^-n <= e^-e`.
    pub fn guarded(self, q: f64) -> Result<Self> {
        check_q(q)?;
        let mut n = self.n_min;
        while q.powi(-n) > loglog_guard() {
            n += 1;
        }
        if n > self.n_max {
            return Err(LabError::Domain(format!(
                "no scale q^-n <= e^-e in [{}, {}] for q = {q}",
                self.n_min, self.n_max
            )));
        }
        Ok(Self { n_min: n, n_max: self.n_max })
    }

    pub fn scales(&self, q: f64) -> impl Iterator<Item = (i32, f64)> + '_ {
        (self.n_min..=self.n_max).map(move |n| (n, q.powi(-n)))
    }

    /// Lambda values `lambda` and `lambda + q^-n` needed by a scan.
    pub fn column(&self, q: f64, lambda: f64) -> Vec<f64> {
        let mut v: Vec<f64> = std::iter::once(lambda).chain(self.scales(q).map(|(_, h)| lambda + h)).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0) {
        return Err(LabError::Domain(format!("q must exceed 1, got {q}")));
    }
    Ok(())
}

/// One record per scale at `(tau, lambda)`. Every scale must satisfy the
/// log-log guard and be present in the sample's grid.
pub fn oscillation_scan(
    sample: &FieldSample,
    p: &ModelParams,
    tau: f64,
    lambda: f64,
    q: f64,
    range: ScaleRange,
) -> Result<Vec<OscillationRecord>> {
    check_q(q)?;
    let grid = &sample.grid;
    let h_min = q.powi(-range.n_max);
    let tol = (1e-9 * (1.0 + lambda)).min(0.25 * h_min);
    let it = grid
        .find_tau(tau, 1e-12 * (1.0 + tau))
        .ok_or_else(|| LabError::Resolution(format!("grid has no tau row at {tau}")))?;
    let find = |l: f64| {
        grid.find_lambda(l, tol).ok_or_else(|| {
            LabError::Resolution(format!(
                "grid has no lambda at {l}; scanning column {lambda} needs points lambda + q^-n down to spacing {h_min:e}"
            ))
        })
    };
    let base = sample.value(it, find(lambda)?);
    range
        .scales(q)
        .map(|(n, h)| {
            if h > loglog_guard() {
                return Err(LabError::Domain(format!("scale q^-{n} = {h} exceeds the log-log guard e^-e")));
            }
            let raw = sample.value(it, find(lambda + h)?) - base;
            Ok(OscillationRecord {
                tau,
                lambda,
                n,
                h,
                raw_increment: raw,
                lil_statistic: raw.abs() / ((tau + lambda).sqrt() * lil_normalizer(p, h)),
                mod_statistic: raw.abs() / mod_normalizer(p, h),
            })
        })
        .collect()
}

pub fn max_lil_statistic(records: &[OscillationRecord]) -> f64 {
    records.iter().map(|r| r.lil_statistic).fold(0.0, f64::max)
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Per-replication `max_n lil_statistic`.
pub fn lil_max_statistics(
    samples: &[FieldSample],
    p: &ModelParams,
    tau: f64,
    lambda: f64,
    q: f64,
    range: ScaleRange,
) -> Result<Vec<f64>> {
    samples.iter().map(|s| oscillation_scan(s, p, tau, lambda, q, range).map(|r| max_lil_statistic(&r))).collect()
}

/// Median over replications of `max_n lil_statistic`, the finite-scale proxy
/// for the iterated-logarithm constant.
pub fn lil_constant_estimate(
    samples: &[FieldSample],
    p: &ModelParams,
    tau: f64,
    lambda: f64,
    q: f64,
    range: ScaleRange,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(LabError::Domain("no replications".into()));
    }
    Ok(median(&mut lil_max_statistics(samples, p, tau, lambda, q, range)?))
}

/// Checks `| |f + g| - |f| | <= |g|` scale by scale on raw increments, with a
/// few ulps of slack for the rounding of `f + g`. Returns the largest excess.
pub fn sandwich_excess(f: &[f64], g: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .map(|(&a, &b)| {
            let slack = 4.0 * f64::EPSILON * (a.abs() + b.abs());
            ((a + b).abs() - a.abs()).abs() - b.abs() - slack
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
