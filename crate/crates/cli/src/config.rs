//! Experiment configuration file: one optional section per study.

use std::path::Path;

use recdir_core::mcharness::SweepConfig;
use recdir_core::mlpx::StudyConfig;
use recdir_core::taskspace::TaskspaceConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub sweep: SweepConfig,
    pub taskspace: TaskspaceConfig,
    pub ettm1: StudyConfig,
}

/// Reads TOML, or JSON when the file name ends in `.json`. No path means
/// all defaults.
pub fn load(path: Option<&Path>) -> Result<FileConfig, String> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
