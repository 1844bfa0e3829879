//! Command orchestration behind the `swe-lab` binary: configuration,
//! seeding, the five commands and result emission.
//!
//! Every JSON output has the shape `{meta, results}`. `meta` echoes the
//! configuration document verbatim next to the resolved settings; its
//! `generated_at_unix_ms` field is the only content that varies between two
//! runs with the same configuration and seed.

mod commands;
mod config;
mod selftest;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};

pub use commands::{run_lil, run_propagate, run_sample, run_slepian, LilResults, SampleResults, SlepianResults};
pub use config::{
    schema, BandSpec, Config, ExperimentSection, GridSection, LoadedConfig, ModelSection, OutputSection, ScalesSection,
    SlepianSection, FIELD_DOCS,
};
pub use selftest::{run_selftest, SelftestSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOLUTION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Selftest,
    Sample,
    Lil,
    Propagate,
    Slepian,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Selftest => "selftest",
            Command::Sample => "sample",
            Command::Lil => "lil",
            Command::Propagate => "propagate",
            Command::Slepian => "slepian",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// What a command did: exit code, a one-line message, the files written and
/// anything meant for stdout.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub message: String,
    pub files: Vec<PathBuf>,
    pub stdout: Option<String>,
}

pub fn exit_code_for(err: &LabError) -> i32 {
    match err {
        LabError::Config(_) | LabError::Domain(_) | LabError::Precondition(_) | LabError::Json(_) => EXIT_CONFIG,
        LabError::Resolution(_)
        | LabError::Resource(_)
        | LabError::Conditioning { .. }
        | LabError::Asymmetric { .. }
        | LabError::Io(_) => EXIT_RESOLUTION,
    }
}

/// Loads the configuration, applies the overrides and runs the command.
/// Never panics on bad input; errors become exit codes 2 or 3.
pub fn execute(inv: &Invocation) -> RunOutcome {
    match try_execute(inv) {
        Ok(o) => o,
        Err(e) => RunOutcome { exit_code: exit_code_for(&e), message: e.to_string(), files: vec![], stdout: None },
    }
}

fn try_execute(inv: &Invocation) -> Result<RunOutcome> {
    let mut loaded = match &inv.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::defaults(),
    };
    if let Some(seed) = inv.seed {
        loaded.config.experiment.seed = Some(seed);
    }
    let out_dir = inv.out.clone().or_else(|| loaded.config.output.dir.as_ref().map(PathBuf::from));
    let cfg = &loaded.config;
    let mut emitter = Emitter::new(inv.command, &loaded, out_dir.clone());

    let (pass, message) = match inv.command {
        Command::Selftest => {
            let summary = run_selftest(&cfg.model.selftest_betas)?;
            let msg = format!("selftest: {}/{} checks passed", summary.passed, summary.total);
            let pass = summary.pass();
            if out_dir.is_some() {
                emitter.json("selftest.json", &summary)?;
            } else {
                emitter.stdout = Some(serde_json::to_string_pretty(&emitter.document(&summary)?)?);
            }
            (pass, msg)
        }
        Command::Sample => {
            let seed = cfg.require_seed()?;
            let dir = emitter.dir()?;
            let res = run_sample(cfg, seed, &dir)?;
            emitter.files.extend(res.files.iter().cloned());
            let msg = format!("sample: {} replications on {} points", res.n_reps, res.n_points);
            emitter.json("sample.json", &res)?;
            (true, msg)
        }
        Command::Lil => {
            let seed = cfg.require_seed()?;
            let dir = emitter.dir()?;
            let res = run_lil(cfg, seed, &dir)?;
            emitter.files.extend(res.files.iter().cloned());
            let msg = format!(
                "lil: estimate {:.4} vs K_beta {:.4} (ratio {:.3}), sandwich {}",
                res.lil_constant_estimate,
                res.k_beta,
                res.ratio_to_k_beta,
                if res.sandwich_holds { "holds" } else { "violated" }
            );
            let pass = res.pass;
            emitter.json("lil.json", &res)?;
            (pass, msg)
        }
        Command::Propagate => {
            let seed = cfg.require_seed()?;
            let dir = emitter.dir()?;
            let (report, files) = run_propagate(cfg, seed, &dir)?;
            emitter.files.extend(files);
            let ratios: Vec<String> =
                report.per_tau.iter().map(|t| format!("{}: {:.3}", t.tau, t.median_elevation_ratio)).collect();
            let msg = format!(
                "propagate: {} runs counted, median elevation ratios {}",
                report.runs_counted,
                ratios.join(", ")
            );
            let pass = report.pass;
            emitter.json("propagate.json", &report)?;
            (pass, msg)
        }
        Command::Slepian => {
            let res = run_slepian(cfg)?;
            let msg = format!("slepian: {}/{} checks passed", res.passed, res.total);
            let pass = res.pass;
            emitter.json("slepian.json", &res)?;
            (pass, msg)
        }
    };
    Ok(RunOutcome {
        exit_code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        message,
        files: emitter.files,
        stdout: emitter.stdout,
    })
}

struct Emitter<'a> {
    command: Command,
    loaded: &'a LoadedConfig,
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
    stdout: Option<String>,
}

impl<'a> Emitter<'a> {
    fn new(command: Command, loaded: &'a LoadedConfig, dir: Option<PathBuf>) -> Self {
        Self { command, loaded, dir, files: vec![], stdout: None }
    }

    fn dir(&self) -> Result<PathBuf> {
        let dir = self.dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn document<T: Serialize>(&self, results: &T) -> Result<Value> {
        let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        Ok(json!({
            "meta": {
                "tool": "swe-lab",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command.name(),
                "config": self.loaded.raw,
                "resolved": self.loaded.config,
                "generated_at_unix_ms": generated_at,
            },
            "results": serde_json::to_value(results)?,
        }))
    }

    fn json<T: Serialize>(&mut self, name: &str, results: &T) -> Result<()> {
        let path = self.dir()?.join(name);
        write_json(&path, &self.document(results)?)?;
        self.files.push(path);
        Ok(())
    }
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
