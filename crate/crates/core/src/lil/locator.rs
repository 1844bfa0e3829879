//! Nested-interval search for a lambda at which the cross-section `v~1`
//! oscillates faster than the iterated-logarithm rate.
//!
//! Level `n` picks a pair `lambda_n < lambda_n'` of grid points inside the
//! current window, of length at most `2^(1-n)` times the initial length, with
//! `|v(lambda_n') - v(lambda_n)| > phi(lambda_n' - lambda_n)`. The next window
//! is `[lambda_n, lambda~_n]`, where `lambda~_n` is the last grid point before
//! `min(lambda_n', lambda_n + 2^-n L)` such that the inequality against
//! `lambda_n'` holds at every grid point of the window.

use serde::{Deserialize, Serialize};

use super::scan::mod_normalizer;
use crate::error::{LabError, Result};
use crate::riesz::ModelParams;
use crate::sampler::{v1_coefficient, FieldSample};

/// `C0` with `C0 v~1(tau0, .)` a standard fractional Brownian motion.
pub fn fbm_scaling_constant(p: &ModelParams, tau0: f64) -> f64 {
    1.0 / (2.0 * v1_coefficient(p, tau0)).sqrt()
}

/// Lower function `phi(h) = (1/2) C0^-1 sqrt(2 h^p log(1/h))`.
pub fn phi(p: &ModelParams, c0: f64, h: f64) -> f64 {
    0.5 / c0 * (2.0 * h.powf(p.exponent()) * (1.0 / h).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocatorConfig {
    pub initial: (f64, f64),
    pub depth: usize,
    /// Upper bound on the first pair length; capped where `phi` stops increasing.
    pub h0: f64,
    /// A window with at least this many grid points that holds no admissible
    /// pair ends the search with no candidate; smaller windows count as grid
    /// exhaustion.
    pub resolved_points: usize,
}

impl Default for LocatorConfig {
    fn default() -> Self {
        Self { initial: (1.0, 2.0), depth: 8, h0: 0.5, resolved_points: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestLevel {
    pub level: usize,
    pub lambda: f64,
    pub lambda_prime: f64,
    /// End of the next search window; `None` when no grid point qualifies.
    pub lambda_tilde: Option<f64>,
    pub increment: f64,
    pub phi: f64,
    pub ratio: f64,
}

/// `|v(lambda_n') - v(lambda*)|` against `phi(h_n)` with `h_n = lambda_n' - lambda*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub level: usize,
    pub h: f64,
    pub increment: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityCandidate {
    pub lambda_star: f64,
    pub interval_history: Vec<NestLevel>,
    pub witnesses: Vec<Witness>,
    /// `mod_statistic` at the finest witness offset.
    pub final_statistic: f64,
    /// `|dv| / phi(h)` at the finest witness offset.
    pub final_phi_ratio: f64,
    pub located_from: String,
    pub c0: f64,
    pub requested_depth: usize,
    pub achieved_depth: usize,
    /// True when the grid ran out before the requested depth.
    pub exhausted: bool,
}

impl SingularityCandidate {
    /// Every witness satisfies the defining inequality.
    pub fn witnesses_hold(&self) -> bool {
        self.witnesses.iter().all(|w| w.increment.abs() > w.phi)
    }

    pub fn witness_offsets(&self) -> Vec<f64> {
        self.witnesses.iter().map(|w| w.h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LocatorOutcome {
    Found(SingularityCandidate),
    NotFound { reason: String, levels_completed: usize },
}

impl LocatorOutcome {
    pub fn candidate(&self) -> Option<&SingularityCandidate> {
        match self {
            Self::Found(c) => Some(c),
            Self::NotFound { .. } => None,
        }
    }
}

struct Path<'a> {
    lam: &'a [f64],
    v: &'a [f64],
    /// `phi` by lag on uniform grids.
    phi_lag: Option<Vec<f64>>,
    p: &'a ModelParams,
    c0: f64,
}

impl Path<'_> {
    fn phi(&self, i: usize, j: usize) -> f64 {
        match &self.phi_lag {
            Some(t) => t[j - i],
            None => phi(self.p, self.c0, self.lam[j] - self.lam[i]),
        }
    }

    fn ratio(&self, i: usize, j: usize) -> f64 {
        (self.v[j] - self.v[i]).abs() / self.phi(i, j)
    }

    /// Last index `k` with `lam[k] < limit` such that the inequality against
    /// `j` holds on `i..=k`; `None` if it already fails at `i + 1`.
    fn tilde(&self, i: usize, j: usize, limit: f64) -> Option<usize> {
        let mut last = None;
        for k in i + 1..j {
            if self.lam[k] >= limit || self.ratio(k, j) <= 1.0 {
                break;
            }
            last = Some(k);
        }
        last
    }

    /// Admissible pair in `lo..=hi` with length `<= max_len` and the largest
    /// `|dv| / phi(h)`; ties keep the leftmost, shortest pair.
    fn best_pair(&self, lo: usize, hi: usize, max_len: f64) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in lo..hi {
            for j in i + 1..=hi {
                if self.lam[j] - self.lam[i] > max_len {
                    break;
                }
                let r = self.ratio(i, j);
                if r > 1.0 && best.is_none_or(|b| r > b.2) {
                    best = Some((i, j, r));
                }
            }
        }
        best
    }
}

fn uniform_phi_table(p: &ModelParams, c0: f64, lam: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    if lam.len() < 2 {
        return None;
    }
    let d = (lam[lam.len() - 1] - lam[0]) / (lam.len() - 1) as f64;
    let uniform = lam.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d);
    uniform.then(|| (0..=max_lag).map(|k| if k == 0 { f64::NAN } else { phi(p, c0, k as f64 * d) }).collect())
}

/// Runs the nested-interval search on the first row of `sample`.
pub fn locate_singularity(
    sample: &FieldSample,
    p: &ModelParams,
    c0_hat: f64,
    cfg: &LocatorConfig,
) -> Result<LocatorOutcome> {
    if !(c0_hat > 0.0) {
        return Err(LabError::Domain(format!("c0 must be positive, got {c0_hat}")));
    }
    let (a, b) = cfg.initial;
    if !(a < b) || cfg.depth == 0 {
        return Err(LabError::Domain(format!("need a < b and depth >= 1, got [{a}, {b}], depth {}", cfg.depth)));
    }
    let lam = sample.grid.lambda_values();
    let v = sample.row(0);
    let tol = 1e-12 * (1.0 + b.abs());
    let lo = lam.partition_point(|&l| l < a - tol);
    let hi = lam.partition_point(|&l| l <= b + tol);
    if hi < lo + 2 {
        return Err(LabError::Resolution(format!("fewer than two grid points in [{a}, {b}]")));
    }
    let hi = hi - 1;
    let total = b - a;
    // phi increases on (0, e^(-1/p))
    let h0 = cfg.h0.min((-1.0 / p.exponent()).exp());
    let max_lag = hi - lo;
    let path = Path { lam, v, phi_lag: uniform_phi_table(p, c0_hat, &lam[lo..=hi], max_lag), p, c0: c0_hat };

    let mut history: Vec<NestLevel> = Vec::new();
    let (mut w_lo, mut w_hi) = (lo, hi);
    let mut exhausted = false;
    for level in 1..=cfg.depth {
        let mut max_len = total * 2f64.powi(1 - level as i32);
        if level == 1 {
            max_len = max_len.min(h0 * (1.0 - 1e-12));
        }
        let next_len = total * 2f64.powi(-(level as i32));
        let points = w_hi - w_lo + 1;
        match path.best_pair(w_lo, w_hi, max_len) {
            None if points >= cfg.resolved_points || level == 1 => {
                return Ok(LocatorOutcome::NotFound {
                    reason: format!(
                        "no pair of length <= {max_len:e} in [{}, {}] exceeds phi at level {level}",
                        lam[w_lo], lam[w_hi]
                    ),
                    levels_completed: level - 1,
                });
            }
            None => {
                exhausted = true;
                break;
            }
            Some((i, j, r)) => {
                let limit = lam[j].min(lam[i] + next_len);
                let tilde = path.tilde(i, j, limit);
                history.push(NestLevel {
                    level,
                    lambda: lam[i],
                    lambda_prime: lam[j],
                    lambda_tilde: tilde.map(|k| lam[k]),
                    increment: v[j] - v[i],
                    phi: path.phi(i, j),
                    ratio: r,
                });
                match tilde {
                    Some(k) if level < cfg.depth => {
                        w_lo = i;
                        w_hi = k;
                    }
                    Some(_) => {}
                    None => {
                        if level < cfg.depth {
                            exhausted = true;
                        }
                        break;
                    }
                }
            }
        }
    }

    let last = *history.last().expect("level 1 succeeded");
    let star = lam.partition_point(|&l| l < last.lambda);
    let witnesses: Vec<Witness> = history
        .iter()
        .map(|lvl| {
            let j = lam.partition_point(|&l| l < lvl.lambda_prime);
            Witness { level: lvl.level, h: lam[j] - lam[star], increment: v[j] - v[star], phi: path.phi(star, j) }
        })
        .collect();
    let finest = witnesses.iter().min_by(|x, y| x.h.total_cmp(&y.h)).expect("nonempty");
    let band = match sample.grid.time_band() {
        Some(b) => format!("[{}, {})", b.lo(), b.hi()),
        None => "unbanded".to_string(),
    };
    Ok(LocatorOutcome::Found(SingularityCandidate {
        lambda_star: lam[star],
        final_statistic: finest.increment.abs() / mod_normalizer(p, finest.h),
        final_phi_ratio: finest.increment.abs() / finest.phi,
        witnesses,
        located_from: format!(
            "row tau = {} of seed {} replication {}, noise band {band}",
            sample.grid.tau_values()[0],
            sample.seed,
            sample.replication_id
        ),
        c0: c0_hat,
        requested_depth: cfg.depth,
        achieved_depth: history.len(),
        exhausted,
        interval_history: history,
    }))
}
