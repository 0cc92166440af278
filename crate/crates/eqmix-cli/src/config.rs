//! TOML config file mirroring every flag, one section per subcommand.
//! Flags win over config values; config values win over built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use eqmix::error::{Error, Result};
use eqmix::{Criterion, TestKind};

use crate::args::{FormatArg, OutputForm, WhichTest};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TestConfig {
    pub format: Option<FormatArg>,
    pub column: Option<String>,
    pub test: Option<WhichTest>,
    pub criterion: Option<Criterion>,
    pub k: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub out: Option<OutputForm>,
    pub density_points: Option<usize>,
    pub density_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateConfig {
    pub dist: Option<Vec<String>>,
    pub n_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub levels: Option<Vec<f64>>,
    pub tests: Option<Vec<TestKind>>,
    pub seed: Option<u64>,
    pub k_max: Option<usize>,
    pub nm3_params: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Reads and parses the config file, or returns the empty default when no
/// path was given.
pub fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| {
                Error::Config(format!("config file {}: {e}", path.display()))
            })
        }
    }
}
