//! Run manifests: a JSON document that, together with the referenced
//! inputs, fully reproduces a run. No wall-clock fields, so repeat runs
//! digest-match.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use weaksync::{IntegratorStats, SyncReport};

use crate::failure::Failure;
use crate::scenario::ResolvedConfig;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum RunStatus {
    Ok,
    Failed { error: String, failed_at: Option<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub scenario: String,
    pub config: ResolvedConfig,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub integrator: Option<IntegratorStats>,
    pub report: Option<SyncReport>,
    pub status: RunStatus,
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn digest_file(path: &Path) -> Result<InputDigest, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256,
    })
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Failure::Input(format!("manifest serialization: {e}")))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}
