//! Exact samples of the cross-section `v~1(tau0, .)`, a scaled fractional
//! Brownian motion with Hurst index `(2 - beta) / 2`.
//!
//! Uniform grids anchored at a multiple of the spacing use circulant
//! embedding of the stationary increments (exact for Hurst index >= 1/2, so
//! for every admissible beta). Other grids use the dense factorization.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::cov::{factorize, sample_vectors, CovMatrix, FieldSample};
use super::grid::GridSpec;
use super::rng::standard_normals;
use crate::error::{LabError, Result};
use crate::exec;
use crate::riesz::{v1_crosssection_covariance, ModelParams, TimeBand};

/// Largest cross-section handled by circulant embedding.
pub const FBM_POINT_CAP: usize = 1 << 20;
/// Jitter ceiling for the dense path.
pub const FBM_MAX_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    /// Circulant embedding when the grid allows it, dense otherwise.
    Auto,
    Dense,
    Circulant,
}

/// Coefficient `A` in `Cov = A (l^p + l'^p - |l - l'|^p)`.
pub fn v1_coefficient(p: &ModelParams, tau0: f64) -> f64 {
    let beta = p.beta();
    2f64.powf(-(3.0 + beta) / 2.0) * tau0 / ((2.0 - beta) * (1.0 - beta))
}

/// Covariance matrix of `v~1(tau0, lambdas)`.
pub fn v1_covariance_matrix(p: &ModelParams, tau0: f64, lambdas: &[f64]) -> Result<CovMatrix> {
    let n = lambdas.len();
    let rows = exec::map_range(n, |i| {
        (0..=i).map(|j| v1_crosssection_covariance(p, tau0, lambdas[i], lambdas[j])).collect::<Result<Vec<f64>>>()
    });
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovMatrix::from_entries(m)
}

/// `(spacing, offset index)` when `lambdas[i] = (k0 + i) * spacing`.
fn uniform_layout(lambdas: &[f64]) -> Option<(f64, usize)> {
    if lambdas.len() < 2 {
        return None;
    }
    let n = lambdas.len();
    let dl = (lambdas[n - 1] - lambdas[0]) / (n - 1) as f64;
    let tol = 1e-9 * dl;
    if lambdas.iter().enumerate().any(|(i, &l)| (l - lambdas[0] - i as f64 * dl).abs() > tol * (1.0 + i as f64)) {
        return None;
    }
    let k0 = (lambdas[0] / dl).round();
    if (lambdas[0] - k0 * dl).abs() > tol * (1.0 + k0) || k0 > 4.0 * n as f64 {
        return None;
    }
    Some((dl, k0 as usize))
}

/// Samples `v~1(tau0, .)` on `lambdas`. The returned samples carry a
/// one-row grid `{tau0} x lambdas` banded to `[0, tau0 / sqrt 2)`.
pub fn sample_fbm_crosssection(
    p: &ModelParams,
    tau0: f64,
    lambdas: &[f64],
    seed: u64,
    n_reps: usize,
) -> Result<Vec<FieldSample>> {
    sample_fbm_crosssection_with(p, tau0, lambdas, seed, n_reps, FbmMethod::Auto)
}

pub fn sample_fbm_crosssection_with(
    p: &ModelParams,
    tau0: f64,
    lambdas: &[f64],
    seed: u64,
    n_reps: usize,
    method: FbmMethod,
) -> Result<Vec<FieldSample>> {
    if !(tau0 > 0.0) {
        return Err(LabError::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    let layout = uniform_layout(lambdas);
    let use_circulant = match method {
        FbmMethod::Dense => false,
        FbmMethod::Circulant => {
            if layout.is_none() {
                return Err(LabError::Precondition(
                    "circulant embedding needs lambdas on a uniform grid anchored at a multiple of its spacing".into(),
                ));
            }
            true
        }
        FbmMethod::Auto => layout.is_some(),
    };
    let cap = if use_circulant { FBM_POINT_CAP } else { super::grid::DEFAULT_POINT_CAP };
    let grid = Arc::new(GridSpec::with_cap(vec![tau0], lambdas.to_vec(), Some(TimeBand::before(tau0)?), cap)?);
    let values = match (use_circulant, layout) {
        (true, Some((dl, k0))) => circulant_paths(p, tau0, dl, k0, lambdas.len(), seed, n_reps),
        _ => {
            let m = factorize(&v1_covariance_matrix(p, tau0, lambdas)?, FBM_MAX_JITTER)?;
            sample_vectors(&m, seed, n_reps)?
        }
    };
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(rep, values)| FieldSample { grid: grid.clone(), values, seed, replication_id: rep as u64 })
        .collect())
}

/// Eigenvalues of the minimal circulant embedding of the increment
/// autocovariance `gamma(0..=n)`.
fn embedding_eigenvalues(gamma: &[f64]) -> Vec<f64> {
    let n = gamma.len() - 1;
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> =
        (0..m).map(|k| Complex::new(if k <= n { gamma[k] } else { gamma[m - k] }, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

fn circulant_paths(
    p: &ModelParams,
    tau0: f64,
    dl: f64,
    k0: usize,
    n_points: usize,
    seed: u64,
    n_reps: usize,
) -> Vec<Vec<f64>> {
    // increments over (i dl, (i + 1) dl] for i < k0 + n_points - 1
    let n_inc = (k0 + n_points - 1).max(1);
    let e = p.exponent();
    let a = v1_coefficient(p, tau0) * dl.powf(e);
    let g = |k: f64| a * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e));
    let gamma: Vec<f64> = (0..=n_inc).map(|k| g(k as f64)).collect();
    let m = 2 * n_inc;
    let scale: Vec<f64> = embedding_eigenvalues(&gamma)
        .into_iter()
        // negative rounding residue only
        .map(|ev| (ev.max(0.0) / m as f64).sqrt())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    exec::map_range(n_reps, |rep| {
        let z = standard_normals(seed, rep as u64, 2 * m);
        let mut w: Vec<Complex<f64>> = (0..m).map(|k| Complex::new(z[2 * k], z[2 * k + 1]) * scale[k]).collect();
        fft.process(&mut w);
        let mut path = Vec::with_capacity(n_points);
        let mut level = 0.0;
        if k0 == 0 {
            path.push(0.0);
        }
        for (i, c) in w.iter().take(n_inc).enumerate() {
            level += c.re;
            if i + 1 >= k0 && path.len() < n_points {
                path.push(level);
            }
        }
        path
    })
}

/// Hurst index from the log-log slope of the mean squared increment against
/// the lag. Lags are in grid steps; `paths` share a uniform spacing.
pub fn hurst_from_paths(paths: &[&[f64]], lags: &[usize]) -> Result<f64> {
    let mut xs = Vec::with_capacity(lags.len());
    let mut ys = Vec::with_capacity(lags.len());
    for &lag in lags {
        let mut sum = 0.0;
        let mut count = 0usize;
        for path in paths {
            for w in path.windows(lag + 1) {
                let d = w[lag] - w[0];
                sum += d * d;
                count += 1;
            }
        }
        if count == 0 || sum <= 0.0 {
            return Err(LabError::Resolution(format!("no nonzero increments at lag {lag}")));
        }
        xs.push((lag as f64).ln());
        ys.push((sum / count as f64).ln());
    }
    Ok(0.5 * slope(&xs, &ys)?)
}

/// Same regression on the exact mean squared increments of a covariance matrix.
pub fn hurst_from_covariance(cov: &DMatrix<f64>, lags: &[usize]) -> Result<f64> {
    let n = cov.nrows();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &lag in lags {
        if lag == 0 || lag >= n {
            return Err(LabError::Resolution(format!("lag {lag} does not fit {n} points")));
        }
        let msq = (0..n - lag).map(|i| cov[(i + lag, i + lag)] + cov[(i, i)] - 2.0 * cov[(i, i + lag)]).sum::<f64>()
            / (n - lag) as f64;
        xs.push((lag as f64).ln());
        ys.push(msq.ln());
    }
    Ok(0.5 * slope(&xs, &ys)?)
}

fn slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(LabError::Domain("regression needs at least two lags".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
