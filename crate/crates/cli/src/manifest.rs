//! Run manifest written next to each command's outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub base_seed: u64,
    pub config: C,
    /// Relative to the output directory.
    pub outputs: Vec<String>,
    pub failures: usize,
    pub duration_secs: f64,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &'static str, base_seed: u64, config: C) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            base_seed,
            config,
            outputs: Vec::new(),
            failures: 0,
            duration_secs: 0.0,
        }
    }

    pub fn set_outputs(&mut self, dir: &Path, paths: &[PathBuf]) {
        self.outputs = paths
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect();
    }

    /// Writes to a temporary file and renames it into place.
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let target = dir.join(FILE_NAME);
        let tmp = dir.join(format!(".{FILE_NAME}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(target)
    }
}
