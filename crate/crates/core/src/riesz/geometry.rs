use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A point of the half plane carried in both the original `(t, x)` frame and
/// the frame `(tau, lambda)` rotated by -45 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub t: f64,
    pub x: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl PlanePoint {
    pub fn from_tx(t: f64, x: f64) -> Self {
        Self { t, x, tau: (t - x) / SQRT_2, lambda: (t + x) / SQRT_2 }
    }

    pub fn from_rotated(tau: f64, lambda: f64) -> Self {
        Self { t: (tau + lambda) / SQRT_2, x: (lambda - tau) / SQRT_2, tau, lambda }
    }
}

/// Closed interval `[a, b]`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    a: f64,
    b: f64,
}

impl Segment {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(LabError::Domain(format!("segment needs finite a <= b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Half-open restriction `[lo, hi)` of the noise time axis; `hi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBand {
    lo: f64,
    hi: f64,
}

impl TimeBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(LabError::Domain(format!("time band needs 0 <= lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    /// Noise strictly before time `tau0 / sqrt(2)`: the component generated by
    /// the information available at rotated time `tau0`.
    pub fn before(tau0: f64) -> Result<Self> {
        Self::new(0.0, tau0 / SQRT_2)
    }

    /// Noise from time `tau0 / sqrt(2)` on.
    pub fn after(tau0: f64) -> Result<Self> {
        Self::new(tau0 / SQRT_2, f64::INFINITY)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub(crate) fn intersect(a: Option<TimeBand>, b: Option<TimeBand>) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for band in [a, b].into_iter().flatten() {
            lo = lo.max(band.lo);
            hi = hi.min(band.hi);
        }
        (lo, hi)
    }
}

/// Backward light cone `{(s, y) : 0 <= s <= t, |x - y| <= t - s}` of an apex,
/// optionally truncated to a time band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightCone {
    pub apex: PlanePoint,
    pub time_band: Option<TimeBand>,
}

impl LightCone {
    pub fn new(apex: PlanePoint) -> Self {
        Self { apex, time_band: None }
    }

    pub fn banded(apex: PlanePoint, band: Option<TimeBand>) -> Self {
        Self { apex, time_band: band }
    }

    /// Cone of `u~(tau, lambda)`.
    pub fn rotated(tau: f64, lambda: f64) -> Self {
        Self::new(PlanePoint::from_rotated(tau, lambda))
    }

    /// The spatial slice at time `s`, ignoring the band. `None` past the apex.
    pub fn slice(&self, s: f64) -> Option<Segment> {
        let PlanePoint { t, x, .. } = self.apex;
        if s < 0.0 || s > t {
            return None;
        }
        Some(Segment { a: x - (t - s), b: x + (t - s) })
    }

    /// Slice restricted to the band: empty outside `[lo, hi)`.
    pub fn banded_slice(&self, s: f64) -> Option<Segment> {
        if let Some(band) = self.time_band {
            if s < band.lo || s >= band.hi {
                return None;
            }
        }
        self.slice(s)
    }
}
