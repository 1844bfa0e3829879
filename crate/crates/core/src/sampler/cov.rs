use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::grid::GridSpec;
use super::rng::standard_normals;
use crate::error::{LabError, Result};
use crate::exec;
use crate::riesz::{region_covariance, ModelParams, Region};

/// Entries must be symmetric to this absolute tolerance.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// First jitter tried after a plain factorization fails; multiplied by 10 per attempt.
pub const INITIAL_JITTER: f64 = 1e-12;

/// Symmetric covariance matrix with its (optional) lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
    jitter_used: f64,
    factor: Option<DMatrix<f64>>,
    grid: Option<Arc<GridSpec>>,
}

impl CovMatrix {
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(LabError::Domain(format!(
                "covariance must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..i {
                let dev = (entries[(i, j)] - entries[(j, i)]).abs();
                if !(dev <= SYMMETRY_TOL) {
                    return Err(LabError::Asymmetric { row: i, col: j, deviation: dev });
                }
            }
        }
        Ok(Self { entries, jitter_used: 0.0, factor: None, grid: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LabError::Domain("covariance rows must form a square matrix".into()));
        }
        Self::from_entries(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self> {
        if grid.len() != self.dim() {
            return Err(LabError::Domain(format!(
                "grid has {} points but matrix is {}x{}",
                grid.len(),
                self.dim(),
                self.dim()
            )));
        }
        self.grid = Some(Arc::new(grid));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn factor(&self) -> Option<&DMatrix<f64>> {
        self.factor.as_ref()
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_deref()
    }

    pub fn max_diag(&self) -> f64 {
        self.entries.diagonal().iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Multiplies a vector of standard normals by the factor.
    pub fn transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        let l = self.factor.as_ref().ok_or_else(|| LabError::Precondition("matrix is not factorized".into()))?;
        Ok((l * DVector::from_column_slice(z)).as_slice().to_vec())
    }
}

/// Covariance of the field at every point of `grid` (cones carry the grid's band).
pub fn assemble_covariance(p: &ModelParams, grid: &GridSpec) -> Result<CovMatrix> {
    let regions: Vec<Region> = grid.cones().iter().map(Region::cone).collect();
    regions_covariance(p, &regions)?.with_grid(grid.clone())
}

/// Covariance matrix of an arbitrary list of regions.
pub fn regions_covariance(p: &ModelParams, regions: &[Region]) -> Result<CovMatrix> {
    let n = regions.len();
    let rows =
        exec::map_range(n, |i| (0..=i).map(|j| region_covariance(p, &regions[i], &regions[j])).collect::<Vec<f64>>());
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovMatrix::from_entries(m)
}

/// Cholesky factorization that accepts positive semidefinite input: a pivot
/// within rounding of zero whose column is also zero yields a zero column.
fn semidefinite_cholesky(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = a.diagonal().iter().copied().fold(0.0, f64::max) + jitter;
    let tol = 64.0 * f64::EPSILON * scale * (n as f64);
    // row-major lower triangle so row dot products are contiguous
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let (done, rest) = l.split_at_mut((j + 1) * n);
        let row_j = &mut done[j * n..];
        let d = a[(j, j)] + jitter - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if d < -tol {
            return None;
        }
        let pivot = if d <= tol { 0.0 } else { d.sqrt() };
        row_j[j] = pivot;
        let row_j = &done[j * n..];
        for (k, row_i) in rest.chunks_exact_mut(n).enumerate() {
            let i = j + 1 + k;
            let dot: f64 = row_i[..j].iter().zip(&row_j[..j]).map(|(x, y)| x * y).sum();
            let num = a[(i, j)] - dot;
            if pivot == 0.0 {
                // Cauchy-Schwarz: a PSD matrix has |num| <= sqrt(d_i d_j)
                if num.abs() > (tol * scale).sqrt() {
                    return None;
                }
                row_i[j] = 0.0;
            } else {
                row_i[j] = num / pivot;
            }
        }
    }
    Some(DMatrix::from_row_slice(n, n, &l))
}

/// Factorizes with escalating diagonal jitter: none, then `1e-12`, `1e-11`,
/// ... up to `max_jitter`. The jitter that succeeded is recorded.
pub fn factorize(m: &CovMatrix, max_jitter: f64) -> Result<CovMatrix> {
    let mut jitter = 0.0;
    loop {
        if let Some(l) = semidefinite_cholesky(&m.entries, jitter) {
            let mut out = m.clone();
            out.factor = Some(l);
            out.jitter_used = jitter;
            return Ok(out);
        }
        jitter = if jitter == 0.0 { INITIAL_JITTER } else { jitter * 10.0 };
        if jitter > max_jitter * (1.0 + 1e-9) {
            return Err(LabError::Conditioning { max_jitter, min_eigenvalue: m.min_eigenvalue() });
        }
    }
}

/// One replication of the field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: Arc<GridSpec>,
    /// Tau-major values, `values[grid.index(i_tau, i_lambda)]`.
    pub values: Vec<f64>,
    pub seed: u64,
    pub replication_id: u64,
}

impl FieldSample {
    pub fn value(&self, i_tau: usize, i_lambda: usize) -> f64 {
        self.values[self.grid.index(i_tau, i_lambda)]
    }

    /// Values along one tau row.
    pub fn row(&self, i_tau: usize) -> &[f64] {
        let n = self.grid.lambda_values().len();
        &self.values[i_tau * n..(i_tau + 1) * n]
    }
}

/// Replications `factor * z` with `z` from stream `(seed, replication_id)`.
pub fn sample_vectors(m: &CovMatrix, seed: u64, n_reps: usize) -> Result<Vec<Vec<f64>>> {
    if m.factor.is_none() {
        return Err(LabError::Precondition("matrix is not factorized".into()));
    }
    let dim = m.dim();
    let out = exec::map_range(n_reps, |rep| m.transform(&standard_normals(seed, rep as u64, dim)));
    out.into_iter().collect()
}

/// Samples a factorized grid covariance.
pub fn sample(m: &CovMatrix, seed: u64, n_reps: usize) -> Result<Vec<FieldSample>> {
    let grid =
        m.grid.clone().ok_or_else(|| LabError::Precondition("matrix carries no grid; use sample_vectors".into()))?;
    let vectors = sample_vectors(m, seed, n_reps)?;
    Ok(vectors
        .into_iter()
        .enumerate()
        .map(|(rep, values)| FieldSample { grid: grid.clone(), values, seed, replication_id: rep as u64 })
        .collect())
}

/// Sample covariance (known zero mean) of equally long vectors.
pub fn empirical_covariance<'a, I>(vectors: I) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc: Option<DMatrix<f64>> = None;
    let mut count = 0usize;
    for v in vectors {
        let x = DVector::from_column_slice(v);
        let outer = &x * x.transpose();
        acc = Some(match acc {
            Some(a) => a + outer,
            None => outer,
        });
        count += 1;
    }
    match acc {
        Some(a) => a / count as f64,
        None => DMatrix::zeros(0, 0),
    }
}
