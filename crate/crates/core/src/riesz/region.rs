//! Space-time regions whose time slices are single segments, and the exact
//! Riesz-kernel covariance between the noise masses of two such regions.
//!
//! A region is `{(s, y) : s in [s_lo, s_hi), max_i L_i(s) <= y <= min_j R_j(s)}`
//! with every `L_i`, `R_j` affine in `s`. It is stored as a list of pieces on
//! which a single left and a single right line are active, so each pairwise
//! slice energy is a sum of `|alpha + m s|^(2 - beta)` terms with closed-form
//! antiderivatives.

use std::f64::consts::SQRT_2;

use super::geometry::{LightCone, TimeBand};
use super::ModelParams;

/// `y = offset + slope * s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub offset: f64,
    pub slope: f64,
}

impl Line {
    pub const fn new(offset: f64, slope: f64) -> Self {
        Self { offset, slope }
    }

    #[inline]
    pub fn at(&self, s: f64) -> f64 {
        self.offset + self.slope * s
    }

    fn crossing(&self, other: &Line) -> Option<f64> {
        let ds = self.slope - other.slope;
        (ds != 0.0).then(|| (other.offset - self.offset) / ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub s_lo: f64,
    pub s_hi: f64,
    pub left: Line,
    pub right: Line,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    pieces: Vec<Piece>,
}

impl Region {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the region bounded below by the upper envelope of `lefts` and
    /// above by the lower envelope of `rights`, for `s` in `[s_lo, s_hi)`.
    ///
    /// An infinite `s_hi` is allowed when some left line rises faster than
    /// some right line, which makes the region bounded.
    pub fn new(s_lo: f64, s_hi: f64, lefts: &[Line], rights: &[Line]) -> Self {
        if lefts.is_empty() || rights.is_empty() || !(s_hi > s_lo) {
            return Self::empty();
        }
        let all: Vec<Line> = lefts.iter().chain(rights).copied().collect();
        let mut cuts: Vec<f64> = Vec::with_capacity(all.len() * all.len() / 2 + 2);
        for (i, l1) in all.iter().enumerate() {
            for l2 in &all[i + 1..] {
                if let Some(s) = l1.crossing(l2) {
                    if s > s_lo && s < s_hi {
                        cuts.push(s);
                    }
                }
            }
        }
        let s_end = if s_hi.is_finite() {
            s_hi
        } else {
            let max_slope_left = lefts.iter().map(|l| l.slope).fold(f64::NEG_INFINITY, f64::max);
            let min_slope_right = rights.iter().map(|l| l.slope).fold(f64::INFINITY, f64::min);
            assert!(max_slope_left > min_slope_right, "region is unbounded in time");
            // past every crossing the envelopes are straight lines, so the
            // region closes where the steepest pair meets
            let tail = cuts.iter().copied().fold(s_lo, f64::max) + 1.0;
            let l = lefts.iter().copied().max_by(|a, b| a.at(tail).total_cmp(&b.at(tail))).unwrap();
            let r = rights.iter().copied().min_by(|a, b| a.at(tail).total_cmp(&b.at(tail))).unwrap();
            match l.crossing(&r) {
                Some(s) if s > tail => s,
                _ => tail,
            }
        };
        cuts.push(s_lo);
        cuts.push(s_end);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut pieces: Vec<Piece> = Vec::new();
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if !(v > u) {
                continue;
            }
            let mid = 0.5 * (u + v);
            let left = *lefts.iter().max_by(|a, b| a.at(mid).total_cmp(&b.at(mid))).unwrap();
            let right = *rights.iter().min_by(|a, b| a.at(mid).total_cmp(&b.at(mid))).unwrap();
            if right.at(mid) <= left.at(mid) {
                continue;
            }
            match pieces.last_mut() {
                Some(last) if last.s_hi == u && last.left == left && last.right == right => last.s_hi = v,
                _ => pieces.push(Piece { s_lo: u, s_hi: v, left, right }),
            }
        }
        Self { pieces }
    }

    /// Region of a (possibly banded) light cone.
    pub fn cone(cone: &LightCone) -> Self {
        let (lo, hi) = TimeBand::intersect(cone.time_band, None);
        let (t, x) = (cone.apex.t, cone.apex.x);
        Self::new(lo, hi.min(t), &[Line::new(x - t, 1.0)], &[Line::new(x + t, -1.0)])
    }

    /// Region carrying an increment of `u~` over a box in rotated coordinates.
    ///
    /// `u~(tau, lambda)` is half the noise over
    /// `{s >= 0, y >= s - sqrt2 tau, y <= sqrt2 lambda - s}`; differencing in
    /// `lambda` over `(lam_lo, lam_hi]` adds the left line `sqrt2 lam_lo - s`,
    /// differencing in `tau` over `(tau_lo, tau_hi]` adds the right line
    /// `s - sqrt2 tau_lo`. Coordinates may be shifted by a common `y`
    /// translation, so negative values are accepted.
    pub fn rotated_box(
        tau_lo: Option<f64>,
        tau_hi: f64,
        lam_lo: Option<f64>,
        lam_hi: f64,
        band: Option<TimeBand>,
    ) -> Self {
        let mut lefts = vec![Line::new(-SQRT_2 * tau_hi, 1.0)];
        let mut rights = vec![Line::new(SQRT_2 * lam_hi, -1.0)];
        if let Some(l) = lam_lo {
            lefts.push(Line::new(SQRT_2 * l, -1.0));
        }
        if let Some(t) = tau_lo {
            rights.push(Line::new(-SQRT_2 * t, 1.0));
        }
        let (lo, hi) = TimeBand::intersect(band, None);
        Self::new(lo, hi, &lefts, &rights)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Slice at time `s` as `(left, right)`, if nonempty.
    pub fn slice(&self, s: f64) -> Option<(f64, f64)> {
        self.pieces.iter().find(|p| s >= p.s_lo && s < p.s_hi).map(|p| (p.left.at(s), p.right.at(s)))
    }
}

/// `x1^e - x0^e` for `x0, x1 >= 0` given `delta = x1 - x0` exactly, without
/// cancellation when the two are close.
fn pow_diff(x0: f64, x1: f64, delta: f64, e: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let small = x0.min(x1);
    if small <= 0.0 {
        return x1.powf(e) - x0.powf(e);
    }
    let mag = small.powf(e) * (e * (delta.abs() / small).ln_1p()).exp_m1();
    mag.copysign(delta)
}

/// `int_lo^hi |alpha + m s|^p ds`, split at the root of the affine argument.
pub(crate) fn abs_power_integral(alpha: f64, m: f64, lo: f64, hi: f64, p: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    if m == 0.0 {
        return alpha.abs().powf(p) * (hi - lo);
    }
    let root = -alpha / m;
    let mut total = 0.0;
    let mut part = |u: f64, v: f64| {
        if v <= u {
            return;
        }
        let (fu, fv) = (alpha + m * u, alpha + m * v);
        // on [u, v] the argument keeps one sign; |.| then has slope `ms`
        let sign = if fu + fv >= 0.0 { 1.0 } else { -1.0 };
        let ms = sign * m;
        let (x0, x1) = ((sign * fu).max(0.0), (sign * fv).max(0.0));
        total += pow_diff(x0, x1, ms * (v - u), p + 1.0) / ((p + 1.0) * ms);
    };
    if root > lo && root < hi {
        part(lo, root);
        part(root, hi);
    } else {
        part(lo, hi);
    }
    total
}

/// Exact covariance of `W(A) / 2` and `W(B) / 2` for two slice regions.
pub fn region_covariance(params: &ModelParams, a: &Region, b: &Region) -> f64 {
    let p = params.exponent();
    let mut total = 0.0;
    for pa in &a.pieces {
        for pb in &b.pieces {
            let lo = pa.s_lo.max(pb.s_lo);
            let hi = pa.s_hi.min(pb.s_hi);
            if hi > lo {
                total += slice_energy_integral(pa, pb, lo, hi, p);
            }
        }
    }
    0.25 * total / (p * (p - 1.0))
}

/// `int (G(c - b) + G(d - a) - G(c - a) - G(d - b)) ds` with `G = |.|^p` for
/// slices `[a, b]` of `pa` and `[c, d]` of `pb`.
fn slice_energy_integral(pa: &Piece, pb: &Piece, lo: f64, hi: f64, p: f64) -> f64 {
    let diff = |u: &Line, v: &Line| (u.offset - v.offset, u.slope - v.slope);
    let terms = [
        (diff(&pb.left, &pa.right), 1.0),
        (diff(&pb.right, &pa.left), 1.0),
        (diff(&pb.left, &pa.left), -1.0),
        (diff(&pb.right, &pa.right), -1.0),
    ];
    terms.iter().map(|&((alpha, m), sign)| sign * abs_power_integral(alpha, m, lo, hi, p)).sum()
}
