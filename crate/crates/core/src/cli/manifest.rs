//! Run manifest written next to every experiment's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// JSON schema of [`RunManifest`], published for downstream tooling.
pub const MANIFEST_SCHEMA: &str = include_str!("../../schema/manifest.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl OutputFile {
    pub fn of(path: &str, contents: &[u8]) -> Self {
        let digest = Sha256::digest(contents);
        Self {
            path: path.to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            bytes: contents.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// Full command line as invoked.
    pub command: Vec<String>,
    pub version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    /// Resolved configuration after defaults, file and flags.
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| crate::Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}
