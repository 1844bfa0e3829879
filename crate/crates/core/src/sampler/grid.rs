use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::riesz::{LightCone, PlanePoint, TimeBand};

/// Largest number of grid points accepted by default.
pub const DEFAULT_POINT_CAP: usize = 4096;

/// Tensor grid `tau_values x lambda_values` in rotated coordinates, with an
/// optional time band applied to every cone. Points are ordered tau-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    tau_values: Vec<f64>,
    lambda_values: Vec<f64>,
    time_band: Option<TimeBand>,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(LabError::Domain(format!("{name} axis is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(LabError::Domain(format!("{name} values must be finite and >= 0, got {v}")));
    }
    if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(LabError::Domain(format!("{name} values must be strictly increasing, got {} then {}", w[0], w[1])));
    }
    Ok(())
}

impl GridSpec {
    pub fn new(tau_values: Vec<f64>, lambda_values: Vec<f64>, time_band: Option<TimeBand>) -> Result<Self> {
        Self::with_cap(tau_values, lambda_values, time_band, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(
        tau_values: Vec<f64>,
        lambda_values: Vec<f64>,
        time_band: Option<TimeBand>,
        cap: usize,
    ) -> Result<Self> {
        check_axis("tau", &tau_values)?;
        check_axis("lambda", &lambda_values)?;
        let n = tau_values.len() * lambda_values.len();
        if n > cap {
            return Err(LabError::Resource(format!("grid has {n} points, cap is {cap}")));
        }
        Ok(Self { tau_values, lambda_values, time_band })
    }

    pub fn tau_values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn lambda_values(&self) -> &[f64] {
        &self.lambda_values
    }

    pub fn time_band(&self) -> Option<TimeBand> {
        self.time_band
    }

    pub fn len(&self) -> usize {
        self.tau_values.len() * self.lambda_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.tau_values.len(), self.lambda_values.len())
    }

    /// Flat index of `(i_tau, i_lambda)`.
    pub fn index(&self, i_tau: usize, i_lambda: usize) -> usize {
        i_tau * self.lambda_values.len() + i_lambda
    }

    /// `(tau, lambda)` of every point in flat order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.tau_values.iter().flat_map(|&t| self.lambda_values.iter().map(move |&l| (t, l))).collect()
    }

    pub fn cones(&self) -> Vec<LightCone> {
        self.points()
            .into_iter()
            .map(|(t, l)| LightCone::banded(PlanePoint::from_rotated(t, l), self.time_band))
            .collect()
    }

    /// Index of the lambda value within `tol` of `lambda`.
    pub fn find_lambda(&self, lambda: f64, tol: f64) -> Option<usize> {
        find_sorted(&self.lambda_values, lambda, tol)
    }

    pub fn find_tau(&self, tau: f64, tol: f64) -> Option<usize> {
        find_sorted(&self.tau_values, tau, tol)
    }
}

fn find_sorted(values: &[f64], x: f64, tol: f64) -> Option<usize> {
    let i = values.partition_point(|&v| v < x);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter(|&j| j < values.len())
        .min_by(|&a, &b| (values[a] - x).abs().total_cmp(&(values[b] - x).abs()))
        .filter(|&j| (values[j] - x).abs() <= tol)
}
