//! JSON configuration with sections `model`, `grid`, `scales`, `experiment`
//! and `output`. Every field has a default except the seed, which the
//! sampling commands require.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::lil::{PropagationConfig, ScaleRange};
use crate::riesz::TimeBand;
use crate::sampler::{GridSpec, DEFAULT_POINT_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Exponent used by `sample`, `lil` and `propagate`.
    pub beta: f64,
    /// Exponents swept by `selftest`.
    pub selftest_betas: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { beta: 0.5, selftest_betas: vec![0.2, 0.5, 0.8] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub lo: f64,
    /// Omit or null for an unbounded band.
    #[serde(default)]
    pub hi: Option<f64>,
}

impl BandSpec {
    pub fn to_band(self) -> Result<TimeBand> {
        TimeBand::new(self.lo, self.hi.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub tau_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub time_band: Option<BandSpec>,
    pub point_cap: usize,
    pub max_jitter: f64,
    /// Replications drawn by `sample`.
    pub n_reps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            tau_values: vec![1.0],
            lambda_values: vec![1.0, 1.25],
            time_band: None,
            point_cap: DEFAULT_POINT_CAP,
            max_jitter: 1e-8,
            n_reps: 16,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<GridSpec> {
        let band = self.time_band.map(BandSpec::to_band).transpose()?;
        GridSpec::with_cap(self.tau_values.clone(), self.lambda_values.clone(), band, self.point_cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalesSection {
    pub q: f64,
    /// Raised to the first index with `q^-n <= e^-e`.
    pub n_min: i32,
    pub n_max: i32,
    pub tau: f64,
    pub lambda: f64,
    /// Replications drawn by `lil`.
    pub n_reps: usize,
    /// The estimate should fall in `[(1 - epsilon) K, (1 + epsilon) K]`.
    pub epsilon: f64,
}

impl Default for ScalesSection {
    fn default() -> Self {
        Self { q: 2.0, n_min: 3, n_max: 12, tau: 1.0, lambda: 1.0, n_reps: 2000, epsilon: 0.5 }
    }
}

impl ScalesSection {
    pub fn range(&self) -> Result<ScaleRange> {
        ScaleRange::new(self.n_min, self.n_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlepianSection {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub r: Vec<f64>,
}

impl Default for SlepianSection {
    fn default() -> Self {
        Self { g1: vec![0.5, 1.0, 1.5, 2.0], g2: vec![0.5, 1.0, 1.5, 2.0], r: vec![-0.6, -0.2, 0.3, 0.7] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// Mandatory for `sample`, `lil` and `propagate`; `--seed` overrides it.
    pub seed: Option<u64>,
    /// Time split of the noise into the `u1` / `u2` components.
    pub tau0: f64,
    pub propagation: PropagationConfig,
    pub slepian: SlepianSection,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { seed: None, tau0: 1.0, propagation: PropagationConfig::default(), slepian: SlepianSection::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; `--out` overrides it.
    pub dir: Option<String>,
    pub csv: bool,
    /// Also write `sample.bin` from `sample`.
    pub binary: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, csv: true, binary: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub grid: GridSection,
    pub scales: ScalesSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

/// A parsed configuration together with the document it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: Value,
    pub config: Config,
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| LabError::Config(format!("invalid JSON: {e}")))?;
        let config: Config =
            serde_json::from_value(raw.clone()).map_err(|e| LabError::Config(format!("invalid configuration: {e}")))?;
        Ok(Self { raw, config })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn defaults() -> Self {
        let config = Config::default();
        Self { raw: Value::Object(Default::default()), config }
    }
}

impl Config {
    pub fn require_seed(&self) -> Result<u64> {
        self.experiment.seed.ok_or_else(|| LabError::Config("experiment.seed is required (or pass --seed)".into()))
    }
}

/// Field documentation, printed by `--help` and written by `schema`.
pub const FIELD_DOCS: &[(&str, &str)] = &[
    ("model.beta", "Riesz exponent in (0, 1) used by sample, lil and propagate"),
    ("model.selftest_betas", "exponents swept by selftest"),
    ("grid.tau_values", "strictly increasing tau coordinates (>= 0) sampled by sample"),
    ("grid.lambda_values", "strictly increasing lambda coordinates (>= 0) sampled by sample"),
    ("grid.time_band", "optional {lo, hi} restriction of the noise time axis; hi null means unbounded"),
    ("grid.point_cap", "largest accepted number of grid points"),
    ("grid.max_jitter", "largest diagonal jitter tried by the factorization"),
    ("grid.n_reps", "replications drawn by sample"),
    ("scales.q", "scale ratio, h = q^-n"),
    ("scales.n_min", "smallest scale index, raised until q^-n <= e^-e"),
    ("scales.n_max", "largest scale index"),
    ("scales.tau", "tau coordinate of the lil scan"),
    ("scales.lambda", "lambda coordinate of the lil scan"),
    ("scales.n_reps", "replications drawn by lil"),
    ("scales.epsilon", "relative half-width of the window around K_beta for the lil estimate"),
    ("experiment.seed", "64-bit seed; required by sample, lil and propagate; --seed overrides"),
    ("experiment.tau0", "time split between the u1 and u2 components"),
    ("experiment.propagation", "propagation experiment settings (runs, rows, locator, controls, thresholds)"),
    ("experiment.slepian", "levels g1, g2 and correlations r checked by slepian"),
    ("output.dir", "output directory; --out overrides; selftest prints to stdout when unset"),
    ("output.csv", "write CSV tables"),
    ("output.binary", "write sample.bin (JSON header plus column-major f64)"),
];

/// Default configuration plus field documentation.
pub fn schema() -> Value {
    let mut defaults = serde_json::to_value(Config::default()).expect("config serializes");
    // the seed has no default; show where it goes
    defaults["experiment"]["seed"] = Value::from(12345u64);
    serde_json::json!({
        "defaults": defaults,
        "fields": FIELD_DOCS.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect::<serde_json::Map<_, _>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = LoadedConfig::parse("{}").unwrap();
        assert_eq!(c.config, Config::default());
        assert!(c.config.require_seed().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = LoadedConfig::parse(r#"{"model": {"bta": 0.5}}"#).unwrap_err();
        assert!(matches!(err, LabError::Config(ref m) if m.contains("bta")), "{err}");
        assert!(matches!(LoadedConfig::parse("{ not json"), Err(LabError::Config(_))));
    }

    #[test]
    fn schema_round_trips_into_a_config() {
        let s = schema();
        let c: Config = serde_json::from_value(s["defaults"].clone()).unwrap();
        assert_eq!(c.experiment.seed, Some(12345));
        let documented: Vec<&str> = FIELD_DOCS.iter().map(|(k, _)| *k).collect();
        for section in ["model", "grid", "scales", "experiment", "output"] {
            for key in s["defaults"][section].as_object().unwrap().keys() {
                assert!(documented.contains(&format!("{section}.{key}").as_str()), "{section}.{key} undocumented");
            }
        }
    }
}
