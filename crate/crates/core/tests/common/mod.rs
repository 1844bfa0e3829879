//! Helpers shared by the integration tests.
#![allow(dead_code, unused_imports)]

pub use swe_lab::riesz::oracle::{field_covariance_oracle, segment_energy_oracle};

pub fn rel_close(x: f64, y: f64, rel: f64, abs: f64) -> bool {
    (x - y).abs() <= abs.max(rel * x.abs().max(y.abs()))
}
