use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::Config;
use crate::error::{LabError, Result};
use crate::gaussian::{
    bivariate_upper_orthant, density_identity_check, slepian_identity_check, IdentityRecord, SlepianReport,
};
use crate::lil::{
    median, oscillation_scan, propagation_experiment, sandwich_excess, OscillationRecord, PropagationReport,
};
use crate::riesz::{field_covariance, make_params, TimeBand};
use crate::sampler::export::{write_binary, write_csv};
use crate::sampler::{derive_seed, FieldSample, GridSampler, GridSpec};

const TAG_LIL_U1: u64 = 11;
const TAG_LIL_U2: u64 = 12;

#[derive(Debug, Clone, Serialize)]
pub struct SampleResults {
    pub beta: f64,
    pub seed: u64,
    pub n_reps: usize,
    pub n_points: usize,
    pub dims: [usize; 2],
    pub jitter_used: f64,
    /// Largest `|empirical - exact|` pointwise variance, in units of
    /// `exact * sqrt(2 / n_reps)`.
    pub max_variance_z: f64,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

/// Draws `grid.n_reps` replications on the configured grid.
pub fn run_sample(cfg: &Config, seed: u64, dir: &Path) -> Result<SampleResults> {
    let p = make_params(cfg.model.beta)?;
    let grid = cfg.grid.grid()?;
    if cfg.grid.n_reps == 0 {
        return Err(LabError::Domain("grid.n_reps must be positive".into()));
    }
    let cones = grid.cones();
    let sampler = GridSampler::new(&p, grid, cfg.grid.max_jitter)?;
    let samples = sampler.sample(seed, cfg.grid.n_reps)?;
    let n = samples.len() as f64;
    let mut max_z = 0.0f64;
    for (k, cone) in cones.iter().enumerate() {
        let exact = field_covariance(&p, cone, cone);
        let emp = samples.iter().map(|s| s.values[k] * s.values[k]).sum::<f64>() / n;
        if exact > 0.0 {
            max_z = max_z.max((emp - exact).abs() / (exact * (2.0 / n).sqrt()));
        }
    }
    let mut files = Vec::new();
    if cfg.output.csv {
        let path = dir.join("sample.csv");
        write_csv(BufWriter::new(File::create(&path)?), &samples)?;
        files.push(path);
    }
    if cfg.output.binary {
        let path = dir.join("sample.bin");
        write_binary(BufWriter::new(File::create(&path)?), &samples, p.beta())?;
        files.push(path);
    }
    let (n_tau, n_lambda) = sampler.grid().dims();
    Ok(SampleResults {
        beta: p.beta(),
        seed,
        n_reps: samples.len(),
        n_points: n_tau * n_lambda,
        dims: [n_tau, n_lambda],
        jitter_used: sampler.jitter_used(),
        max_variance_z: max_z,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleSummary {
    pub n: i32,
    pub h: f64,
    pub median_lil_statistic: f64,
    pub median_mod_statistic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LilResults {
    pub beta: f64,
    pub seed: u64,
    pub tau: f64,
    pub lambda: f64,
    pub q: f64,
    /// Scale indices actually scanned, after the log-log guard.
    pub n_min: i32,
    pub n_max: i32,
    pub n_reps: usize,
    pub lil_constant_estimate: f64,
    pub k_beta: f64,
    pub ratio_to_k_beta: f64,
    pub window: (f64, f64),
    pub within_window: bool,
    /// Share of replications whose max statistic exceeds the upper window edge.
    pub fraction_above_window: f64,
    pub per_scale: Vec<ScaleSummary>,
    /// Split time of the `u~1 + u~2` decomposition used by the sandwich check.
    pub tau0: f64,
    pub max_sandwich_excess: f64,
    pub sandwich_holds: bool,
    pub pass: bool,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

fn banded_sampler(p: &crate::riesz::ModelParams, cfg: &Config, column: &[f64], band: TimeBand) -> Result<GridSampler> {
    let grid = GridSpec::with_cap(vec![cfg.scales.tau], column.to_vec(), Some(band), cfg.grid.point_cap)?;
    GridSampler::new(p, grid, cfg.grid.max_jitter)
}

/// Oscillation statistics of `u~` at one point, sampled as `u~1 + u~2` so the
/// sandwich inequality can be checked on the same draws.
pub fn run_lil(cfg: &Config, seed: u64, dir: &Path) -> Result<LilResults> {
    let p = make_params(cfg.model.beta)?;
    let s = &cfg.scales;
    if s.n_reps == 0 {
        return Err(LabError::Domain("scales.n_reps must be positive".into()));
    }
    if !(s.epsilon > 0.0 && s.epsilon < 1.0) {
        return Err(LabError::Domain(format!("scales.epsilon must lie in (0, 1), got {}", s.epsilon)));
    }
    let range = s.range()?.guarded(s.q)?;
    let column = range.column(s.q, s.lambda);
    if column.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Resolution(format!(
            "scales q^-n for n in [{}, {}] are not resolvable in double precision at lambda = {}",
            range.n_min, range.n_max, s.lambda
        )));
    }
    let tau0 = cfg.experiment.tau0;
    let u1 =
        banded_sampler(&p, cfg, &column, TimeBand::before(tau0)?)?.sample(derive_seed(seed, TAG_LIL_U1), s.n_reps)?;
    let u2 =
        banded_sampler(&p, cfg, &column, TimeBand::after(tau0)?)?.sample(derive_seed(seed, TAG_LIL_U2), s.n_reps)?;
    let full_grid = Arc::new(GridSpec::with_cap(vec![s.tau], column, None, cfg.grid.point_cap)?);

    let mut maxima = Vec::with_capacity(s.n_reps);
    let mut excess = f64::NEG_INFINITY;
    let mut records: Vec<(u64, Vec<OscillationRecord>)> = Vec::with_capacity(s.n_reps);
    for (a, b) in u1.iter().zip(&u2) {
        let sum = FieldSample {
            grid: full_grid.clone(),
            values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
            seed,
            replication_id: a.replication_id,
        };
        let rec = oscillation_scan(&sum, &p, s.tau, s.lambda, s.q, range)?;
        let f: Vec<f64> =
            oscillation_scan(a, &p, s.tau, s.lambda, s.q, range)?.iter().map(|r| r.raw_increment).collect();
        let g: Vec<f64> =
            oscillation_scan(b, &p, s.tau, s.lambda, s.q, range)?.iter().map(|r| r.raw_increment).collect();
        excess = excess.max(sandwich_excess(&f, &g));
        maxima.push(rec.iter().map(|r| r.lil_statistic).fold(0.0, f64::max));
        records.push((a.replication_id, rec));
    }

    let k = p.k_beta();
    let window = ((1.0 - s.epsilon) * k, (1.0 + s.epsilon) * k);
    let above = maxima.iter().filter(|&&m| m > window.1).count() as f64 / maxima.len() as f64;
    let estimate = median(&mut maxima);
    let per_scale = range
        .scales(s.q)
        .enumerate()
        .map(|(i, (n, h))| {
            let mut lil: Vec<f64> = records.iter().map(|(_, r)| r[i].lil_statistic).collect();
            let mut modu: Vec<f64> = records.iter().map(|(_, r)| r[i].mod_statistic).collect();
            ScaleSummary { n, h, median_lil_statistic: median(&mut lil), median_mod_statistic: median(&mut modu) }
        })
        .collect();

    let mut files = Vec::new();
    if cfg.output.csv {
        let path = dir.join("lil_oscillations.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "replication_id,tau,lambda,n,h,raw_increment,lil_statistic,mod_statistic")?;
        for (rep, rec) in &records {
            for r in rec {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    rep, r.tau, r.lambda, r.n, r.h, r.raw_increment, r.lil_statistic, r.mod_statistic
                )?;
            }
        }
        w.flush()?;
        files.push(path);
    }
    let within = window.0 <= estimate && estimate <= window.1;
    let sandwich_holds = excess <= 0.0;
    Ok(LilResults {
        beta: p.beta(),
        seed,
        tau: s.tau,
        lambda: s.lambda,
        q: s.q,
        n_min: range.n_min,
        n_max: range.n_max,
        n_reps: s.n_reps,
        lil_constant_estimate: estimate,
        k_beta: k,
        ratio_to_k_beta: estimate / k,
        window,
        within_window: within,
        fraction_above_window: above,
        per_scale,
        tau0,
        max_sandwich_excess: excess,
        sandwich_holds,
        pass: within && sandwich_holds,
        files,
    })
}

/// Runs the propagation experiment; per-increment rows go to CSV, the rest to
/// the returned report.
pub fn run_propagate(cfg: &Config, seed: u64, dir: &Path) -> Result<(PropagationReport, Vec<PathBuf>)> {
    let p = make_params(cfg.model.beta)?;
    let mut pc = cfg.experiment.propagation.clone();
    pc.seed = seed;
    let mut report = propagation_experiment(&p, cfg.experiment.tau0, &pc)?;
    let increments: Vec<_> = report.runs.iter_mut().flat_map(|r| std::mem::take(&mut r.increments)).collect();
    let mut files = Vec::new();
    if cfg.output.csv {
        let path = dir.join("propagate_increments.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "run,tau,column,lambda,h,u1_increment,u2_increment,mod_statistic")?;
        for r in &increments {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.run, r.tau, r.column, r.lambda, r.h, r.u1_increment, r.u2_increment, r.mod_statistic
            )?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok((report, files))
}

#[derive(Debug, Clone, Serialize)]
pub struct SlepianResults {
    pub total: usize,
    pub passed: usize,
    pub pass: bool,
    pub identity: Vec<SlepianReport>,
    pub density: Vec<IdentityRecord>,
    pub arcsine: Vec<IdentityRecord>,
}

/// Orthant-derivative and mean-value checks over the configured level and
/// correlation grid, plus the arcsine law at level zero.
pub fn run_slepian(cfg: &Config) -> Result<SlepianResults> {
    let s = &cfg.experiment.slepian;
    let mut identity = Vec::new();
    let mut density = Vec::new();
    for &g1 in &s.g1 {
        for &g2 in &s.g2 {
            for &r in &s.r {
                identity.push(slepian_identity_check(g1, g2, r)?);
                density.push(density_identity_check(g1, g2, r)?);
            }
        }
    }
    let arcsine =
        s.r.iter()
            .map(|&r| {
                let closed = 0.25 + r.asin() / (2.0 * std::f64::consts::PI);
                Ok(IdentityRecord::new(
                    "orthant_arcsine",
                    &[("r", r)],
                    (bivariate_upper_orthant(0.0, 0.0, r)? - closed).abs(),
                    1e-10,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
    let flags: Vec<bool> = identity
        .iter()
        .flat_map(|r| [r.derivative.pass, r.mean_value.pass])
        .chain(density.iter().map(|d| d.pass))
        .chain(arcsine.iter().map(|d| d.pass))
        .collect();
    let passed = flags.iter().filter(|&&f| f).count();
    Ok(SlepianResults { total: flags.len(), passed, pass: passed == flags.len(), identity, density, arcsine })
}
