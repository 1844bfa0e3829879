//! Closed-form covariance calculus for the Riesz-correlated noise `W` and the
//! mild solution `u(t, x) = W(cone(t, x)) / 2` of the 1-D wave equation.

mod covariance;
mod geometry;
pub mod oracle;
mod region;

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{LabError, Result};

pub use covariance::{
    canonical_distance, covariance_matrix, dyadic_increment_correlation, dyadic_increment_covariance, field_covariance,
    fit_decay_constant, increment_variance, rectangle_increment_variance, segment_cross_energy,
    shift_invariance_residual, v1_crosssection_covariance, v1_region, DecayFit,
};
pub use geometry::{LightCone, PlanePoint, Segment, TimeBand};
pub use region::{region_covariance, Line, Piece, Region};

/// Agreement required between the two closed forms of `C_beta`.
pub const C_BETA_REL_TOL: f64 = 1e-12;

/// Noise exponent with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    beta: f64,
    c_beta: f64,
    k_beta: f64,
}

/// The two closed forms of the spectral constant `C_beta`, in the order
/// (duplication-formula form, reflection form).
pub fn c_beta_forms(beta: f64) -> (f64, f64) {
    let duplication = PI.sqrt() * 2f64.powf(1.0 - beta) * gamma((1.0 - beta) / 2.0) / gamma(beta / 2.0);
    let reflection = 2.0 * gamma(2.0 - beta) * (PI * beta / 2.0).sin() / (1.0 - beta);
    (duplication, reflection)
}

/// `K_beta^2 = 2^((1 - beta) / 2) / ((2 - beta)(1 - beta))`.
pub fn k_beta_squared(beta: f64) -> f64 {
    2f64.powf((1.0 - beta) / 2.0) / ((2.0 - beta) * (1.0 - beta))
}

pub fn make_params(beta: f64) -> Result<ModelParams> {
    ModelParams::new(beta)
}

impl ModelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(LabError::Domain(format!("beta must lie in the open interval (0, 1), got {beta}")));
        }
        let (c1, c2) = c_beta_forms(beta);
        let rel = (c1 - c2).abs() / c1.abs().max(c2.abs());
        if !(rel <= C_BETA_REL_TOL) {
            return Err(LabError::Domain(format!(
                "closed forms of C_beta disagree at beta = {beta}: {c1} vs {c2} (relative {rel:e})"
            )));
        }
        Ok(Self { beta, c_beta: c1, k_beta: k_beta_squared(beta).sqrt() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }

    pub fn k_beta(&self) -> f64 {
        self.k_beta
    }

    pub fn k_beta_sq(&self) -> f64 {
        self.k_beta * self.k_beta
    }

    /// `2 - beta`: the exponent of the segment energies and twice the Hurst index.
    pub fn exponent(&self) -> f64 {
        2.0 - self.beta
    }

    /// Hurst index `(2 - beta) / 2` of the fixed-time cross-sections.
    pub fn hurst(&self) -> f64 {
        self.exponent() / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_beta_constants() {
        let p = make_params(0.5).unwrap();
        assert!((p.c_beta() - (2.0 * PI).sqrt()).abs() < 1e-13);
        // frozen from direct evaluation of 2^0.25 / 0.75
        assert!((p.k_beta() - 1.259_209_9).abs() < 1e-7);
        assert!((p.k_beta_sq() - 2f64.powf(0.25) / 0.75).abs() < 1e-15);
    }

    #[test]
    fn beta_out_of_range_is_domain_error() {
        for b in [1.5, 0.0, 1.0, -0.2, f64::NAN] {
            let err = make_params(b).unwrap_err();
            assert!(err.to_string().contains("(0, 1)"), "{err}");
        }
    }

    #[test]
    fn both_c_beta_forms_agree_on_a_sweep() {
        for i in 1..100 {
            let beta = i as f64 / 100.0;
            let (a, b) = c_beta_forms(beta);
            assert!((a - b).abs() <= C_BETA_REL_TOL * a, "beta={beta}: {a} vs {b}");
        }
    }
}
