//! Exact Gaussian sampling of the field on finite grids.

pub mod cov;
pub mod export;
pub mod fbm;
pub mod field;
pub mod grid;
pub mod rng;

pub use cov::{
    assemble_covariance, empirical_covariance, factorize, regions_covariance, sample, sample_vectors, CovMatrix,
    FieldSample,
};
pub use fbm::{
    hurst_from_covariance, hurst_from_paths, sample_fbm_crosssection, sample_fbm_crosssection_with, v1_coefficient,
    v1_covariance_matrix, FbmMethod, FBM_POINT_CAP,
};
pub use field::{increment_basis, GridSampler};
pub use grid::{GridSpec, DEFAULT_POINT_CAP};
pub use rng::{derive_seed, replication_rng, standard_normals};
