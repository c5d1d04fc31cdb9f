//! JSON run configurations. Every section rejects unknown keys and fills
//! missing ones from defaults.

use std::f64::consts::TAU;
use std::path::Path;

use elliptic_dyson::special_functions::SeriesPolicy;
use elliptic_dyson::SchemeConfig64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Reads `path` as JSON, or returns the defaults when no path is given.
pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C, CliError> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        let position = format!(" at line {} column {}", e.line(), e.column());
        let message = e.to_string();
        let message = message.strip_suffix(&position).unwrap_or(&message);
        CliError::Config(format!(
            "{}: line {}, column {}: {message}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// Series truncation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
    pub im_tau_switch: f64,
}

impl Default for SeriesSection {
    fn default() -> Self {
        let p = SeriesPolicy::<f64>::default();
        Self {
            abs_tol: p.abs_tol,
            rel_tol: p.rel_tol,
            max_terms: p.max_terms,
            im_tau_switch: p.im_tau_switch,
        }
    }
}

impl SeriesSection {
    pub fn policy(&self) -> SeriesPolicy<f64> {
        SeriesPolicy {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_terms: self.max_terms,
            im_tau_switch: self.im_tau_switch,
        }
    }
}

/// Euler-Maruyama settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub dt: f64,
    pub n_paths: usize,
    pub n_records: usize,
    pub seed: u64,
    pub drift_cfl: f64,
    pub max_substep_halvings: u32,
    pub max_resamples: u32,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let s = SchemeConfig64::for_t_star(1.0);
        Self {
            dt: 1e-3,
            n_paths: 1000,
            n_records: 10,
            seed: 0,
            drift_cfl: s.drift_cfl,
            max_substep_halvings: s.max_substep_halvings,
            max_resamples: s.max_resamples,
        }
    }
}

impl SchemeSection {
    pub fn scheme(&self, t_star: f64, policy: SeriesPolicy<f64>) -> SchemeConfig64 {
        SchemeConfig64 {
            dt: self.dt,
            n_paths: self.n_paths,
            n_records: self.n_records,
            seed: self.seed,
            drift_cfl: self.drift_cfl,
            max_substep_halvings: self.max_substep_halvings,
            max_resamples: self.max_resamples,
            policy,
            ..SchemeConfig64::for_t_star(t_star)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Seed of the random sample points.
    pub seed: u64,
    /// Random points per randomized check.
    pub samples: usize,
    /// Check ids to run; empty runs all.
    pub checks: Vec<String>,
    pub format: ReportFormat,
    pub series: SeriesSection,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: 20,
            checks: Vec::new(),
            format: ReportFormat::Json,
            series: SeriesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Ebes,
    Edys,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub process: ProcessKind,
    /// Dimension of the Bessel process.
    pub d: f64,
    /// Inverse temperature of the Dyson model.
    pub beta: f64,
    pub r: f64,
    pub t_star: f64,
    /// Starting point; one entry for the Bessel process.
    pub u: Vec<f64>,
    pub horizon: f64,
    pub scheme: SchemeSection,
    pub series: SeriesSection,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            process: ProcessKind::Ebes,
            d: 3.0,
            beta: 2.0,
            r: 1.0,
            t_star: 1.0,
            u: vec![1.0],
            horizon: 0.5,
            scheme: SchemeSection::default(),
            series: SeriesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub points: Vec<f64>,
    pub r: f64,
    pub t_star: f64,
    /// Positive time slices.
    pub times: Vec<f64>,
    /// Equispaced spatial nodes per slice.
    pub nodes: usize,
    pub series: SeriesSection,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            points: vec![1.0, 3.2],
            r: 1.0,
            t_star: 1.0,
            times: vec![0.3],
            nodes: 64,
            series: SeriesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub points: Vec<f64>,
    pub r: f64,
    pub t_star: f64,
    pub t: f64,
    pub bins: usize,
    /// Midpoint nodes per bin for the kernel average.
    pub kernel_subnodes: usize,
    pub scheme: SchemeSection,
    pub series: SeriesSection,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            points: vec![1.0, TAU - 1.0],
            r: 1.0,
            t_star: 1.0,
            t: 0.3,
            bins: 64,
            kernel_subnodes: 16,
            scheme: SchemeSection {
                n_paths: 10_000,
                n_records: 1,
                ..SchemeSection::default()
            },
            series: SeriesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinnedConfig {
    pub u: f64,
    pub r: f64,
    pub t_star: f64,
    pub t: f64,
    /// Observables `cos(k x / r)` for each listed `k`.
    pub harmonics: Vec<u32>,
    /// Monte Carlo comparison; `n_paths = 0` skips it.
    pub scheme: SchemeSection,
    pub series: SeriesSection,
}

impl Default for PinnedConfig {
    fn default() -> Self {
        Self {
            u: 1.0,
            r: 1.0,
            t_star: 1.0,
            t: 0.5,
            harmonics: vec![1, 2, 3],
            scheme: SchemeSection {
                n_paths: 10_000,
                n_records: 1,
                ..SchemeSection::default()
            },
            series: SeriesSection::default(),
        }
    }
}
