use std::path::{Path, PathBuf};

use pansu_core::PerturbationSpec;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CONFIG: &str = include_str!("default_config.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Radial cells of every `(r, t)` scan.
    pub radial: usize,
    /// Vertical cells per radius.
    pub vertical: usize,
    /// Points of the leaf-parameter scan `s ∈ (1, s_max]`.
    pub s_points: usize,
    pub s_max: f64,
    /// Fraction of `r_ε` cut from both ends of the curvature scan, where
    /// the field is singular (axis) or all leaves meet (ring).
    pub radial_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub root: f64,
    pub quadrature: f64,
    pub margin: f64,
    pub curvature: f64,
    pub unit_norm: f64,
    pub duality: f64,
    pub boundary: f64,
    pub gauss_green: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Randomized competitors drawn in addition to `specs`.
    pub random_count: usize,
    pub specs: Vec<PerturbationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub fd_step: f64,
    pub seed: u64,
    pub duality_samples: usize,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

impl Default for HarnessConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("embedded default config parses")
    }
}

impl HarnessConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.epsilons.is_empty() {
            return Err(invalid("epsilons", "must not be empty"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(invalid("epsilons", format!("{e} is not in [0, 1)")));
        }
        for (field, v) in [
            ("grid.radial", self.grid.radial),
            ("grid.vertical", self.grid.vertical),
            ("grid.s_points", self.grid.s_points),
            ("duality_samples", self.duality_samples),
        ] {
            if v < 8 {
                return Err(invalid(field, format!("density {v} must be at least 8")));
            }
        }
        if !(self.grid.s_max > 1.0 && self.grid.s_max.is_finite()) {
            return Err(invalid("grid.s_max", "must be a finite number above 1"));
        }
        if !(0.0..0.5).contains(&self.grid.radial_margin) {
            return Err(invalid("grid.radial_margin", "must lie in [0, 0.5)"));
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.root", t.root),
            ("tolerances.quadrature", t.quadrature),
            ("tolerances.margin", t.margin),
            ("tolerances.curvature", t.curvature),
            ("tolerances.unit_norm", t.unit_norm),
            ("tolerances.duality", t.duality),
            ("tolerances.boundary", t.boundary),
            ("tolerances.gauss_green", t.gauss_green),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("{v} must be positive")));
            }
        }
        Ok(())
    }
}
