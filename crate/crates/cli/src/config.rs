//! Optional TOML configuration; command-line flags take precedence.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub level: LevelSection,
    pub grid: GridSection,
    pub simulate: SimulateSection,
    pub run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub family: Option<String>,
    pub zeta: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub power: Option<f64>,
    pub m: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelSection {
    pub alpha: Option<f64>,
    pub alpha_opt: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub m: Option<Vec<usize>>,
    pub beta: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    /// Fixed nominal levels of the BFDR and FDR procedures.
    pub alphas: Option<Vec<f64>>,
    pub procedures: Option<Vec<String>>,
    pub excess_level: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub risk: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().replace('\n', " ");
            anyhow::anyhow!("invalid config file {}: {msg}", path.display())
        })
    }
}
