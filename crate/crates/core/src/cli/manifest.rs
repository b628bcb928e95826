use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::rng::Seed;

pub const MANIFEST_FILE: &str = "manifest.json";
/// Version of the JSON summaries written by the runner.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRange {
    pub stage: String,
    pub master: u64,
    pub first_stream: u64,
    pub count: u64,
}

impl StreamRange {
    pub fn new(stage: impl Into<String>, seed: Seed, count: usize) -> Self {
        StreamRange {
            stage: stage.into(),
            master: seed.master,
            first_stream: seed.stream,
            count: count as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub library_version: String,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub wall_time_seconds: Option<f64>,
    pub streams: Vec<StreamRange>,
    pub outputs: Vec<OutputDigest>,
    pub exit_code: Option<i32>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn start(config: ExperimentConfig, threads: usize) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            status: RunStatus::Running,
            config,
            threads,
            wall_time_seconds: None,
            streams: Vec::new(),
            outputs: Vec::new(),
            exit_code: None,
            error: None,
        }
    }

    pub fn write(&self, dir: &FsPath) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}

pub fn digest_file(dir: &FsPath, file: &str) -> Result<OutputDigest> {
    let bytes = std::fs::read(dir.join(file))?;
    Ok(OutputDigest {
        file: file.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}
