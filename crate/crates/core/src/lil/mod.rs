//! Iterated-logarithm statistics, the nested-interval singularity locator and
//! the propagation experiment.

pub mod locator;
pub mod propagation;
pub mod scan;

pub use locator::{
    fbm_scaling_constant, locate_singularity, phi, LocatorConfig, LocatorOutcome, NestLevel, SingularityCandidate,
    Witness,
};

pub use propagation::{
    column_constancy_residual, propagation_experiment, IncrementRow, PropagationConfig, PropagationReport, RowOutcome,
    RunOutcome, TauSummary,
};
pub use scan::{
    lil_constant_estimate, lil_max_statistics, lil_normalizer, loglog_guard, max_lil_statistic, median, mod_normalizer,
    oscillation_scan, sandwich_excess, OscillationRecord, ScaleRange,
};
