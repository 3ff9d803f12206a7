use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScenarioError;

pub const MIN_SAMPLES: usize = 256;
pub const MIN_QUAD_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Decay table as CSV next to the JSON report.
    #[default]
    Csv,
    /// JSON report only.
    Json,
}

fn default_seed() -> u64 {
    42
}

fn default_samples() -> usize {
    65536
}

fn default_order() -> usize {
    16
}

fn default_grid() -> Vec<f64> {
    (0..8).map(|k| (1u32 << k) as f64).collect()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_order")]
    pub quad_order: usize,
    #[serde(default = "default_grid")]
    pub lambda_grid: Vec<f64>,
    /// Directory receiving `<scenario>.csv` and `<scenario>.json`.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        RunConfig {
            scenario: scenario.into(),
            seed: default_seed(),
            samples: default_samples(),
            quad_order: default_order(),
            lambda_grid: default_grid(),
            out: default_out(),
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.samples < MIN_SAMPLES {
            return Err(ScenarioError::Config(format!(
                "sample count below minimum: {} < {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.quad_order < MIN_QUAD_ORDER {
            return Err(ScenarioError::Config(format!(
                "quadrature order below minimum: {} < {MIN_QUAD_ORDER}",
                self.quad_order
            )));
        }
        if self.lambda_grid.is_empty() {
            return Err(ScenarioError::Config("empty lambda grid".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l >= 1.0 && l.is_finite()))
            || self.lambda_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ScenarioError::Config(format!(
                "lambda grid must be increasing with entries >= 1: {:?}",
                self.lambda_grid
            )));
        }
        Ok(())
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ScenarioError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
