//! Grid sampling through a row-differenced basis.
//!
//! Each tau row is represented by its first value and the increments between
//! consecutive lambda values, all as regions in a frame translated so the
//! first lambda sits at 0. Fine increments then never appear as differences of
//! large, nearly equal covariances.

use std::sync::Arc;

use super::cov::{factorize, regions_covariance, sample_vectors, CovMatrix, FieldSample};
use super::grid::GridSpec;
use crate::error::Result;
use crate::riesz::{ModelParams, Region};

/// Regions of the differenced basis, tau-major like the grid.
pub fn increment_basis(grid: &GridSpec) -> Vec<Region> {
    let lambdas = grid.lambda_values();
    let l0 = lambdas[0];
    let band = grid.time_band();
    grid.tau_values()
        .iter()
        .flat_map(|&tau| {
            let tau = tau + l0;
            std::iter::once(Region::rotated_box(None, tau, None, 0.0, band)).chain(
                lambdas.windows(2).map(move |w| Region::rotated_box(None, tau, Some(w[0] - l0), w[1] - l0, band)),
            )
        })
        .collect()
}

/// Factorized differenced-basis covariance of one grid.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid: Arc<GridSpec>,
    basis: CovMatrix,
}

impl GridSampler {
    pub fn new(p: &ModelParams, grid: GridSpec, max_jitter: f64) -> Result<Self> {
        let basis = factorize(&regions_covariance(p, &increment_basis(&grid))?, max_jitter)?;
        Ok(Self { grid: Arc::new(grid), basis })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn jitter_used(&self) -> f64 {
        self.basis.jitter_used()
    }

    /// Covariance of the differenced basis.
    pub fn basis(&self) -> &CovMatrix {
        &self.basis
    }

    pub fn sample(&self, seed: u64, n_reps: usize) -> Result<Vec<FieldSample>> {
        let n_lambda = self.grid.lambda_values().len();
        let vectors = sample_vectors(&self.basis, seed, n_reps)?;
        Ok(vectors
            .into_iter()
            .enumerate()
            .map(|(rep, mut values)| {
                for row in values.chunks_exact_mut(n_lambda) {
                    for k in 1..row.len() {
                        row[k] += row[k - 1];
                    }
                }
                FieldSample { grid: self.grid.clone(), values, seed, replication_id: rep as u64 }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riesz::{increment_variance, make_params, region_covariance, TimeBand};
    use crate::sampler::assemble_covariance;

    #[test]
    fn basis_reproduces_grid_covariance() {
        let p = make_params(0.6).unwrap();
        for band in [None, Some(TimeBand::before(1.0).unwrap()), Some(TimeBand::after(1.0).unwrap())] {
            let grid = GridSpec::new(vec![0.5, 1.0, 2.0], vec![0.75, 1.0, 1.0625, 1.5], band).unwrap();
            let direct = assemble_covariance(&p, &grid).unwrap();
            let basis = increment_basis(&grid);
            let n = grid.lambda_values().len();
            // value (i, k) is the sum of basis entries (i, 0..=k)
            let value_cov = |a: usize, b: usize| {
                let (ia, ka) = (a / n, a % n);
                let (ib, kb) = (b / n, b % n);
                let mut c = 0.0;
                for x in 0..=ka {
                    for y in 0..=kb {
                        c += region_covariance(&p, &basis[ia * n + x], &basis[ib * n + y]);
                    }
                }
                c
            };
            for a in 0..grid.len() {
                for b in 0..grid.len() {
                    assert!((value_cov(a, b) - direct.entries()[(a, b)]).abs() < 1e-12, "{band:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn fine_increment_variance_is_exact() {
        let p = make_params(0.5).unwrap();
        let h = 2f64.powi(-20);
        let grid = GridSpec::new(vec![1.0], vec![1.0, 1.0 + h], None).unwrap();
        let basis = increment_basis(&grid);
        let v = region_covariance(&p, &basis[1], &basis[1]);
        let exact = increment_variance(&p, 1.0, 1.0, h).unwrap();
        assert!((v / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_rows_are_cumulative() {
        let p = make_params(0.5).unwrap();
        let grid = GridSpec::new(vec![1.0, 1.5], vec![1.0, 1.25, 1.5], None).unwrap();
        let s = GridSampler::new(&p, grid, 1e-8).unwrap();
        let a = s.sample(4, 2).unwrap();
        assert_eq!(a, s.sample(4, 2).unwrap());
        assert_eq!(a[0].values.len(), 6);
    }
}
