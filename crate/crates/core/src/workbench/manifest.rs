//! Run manifest: what was run, on which inputs, producing which files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::DeviceConfig;
use super::io;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: DeviceConfig,
    /// Command-specific parameters (sweep lists and the like).
    pub params: serde_json::Value,
    /// sha256 of each input file, keyed by path.
    pub input_hashes: BTreeMap<String, String>,
    /// Output file names relative to the output directory.
    pub outputs: Vec<String>,
    /// sha256 over command, config, params and input hashes.
    pub run_hash: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str, config: &DeviceConfig, params: serde_json::Value, outputs: Vec<String>) -> Result<Self> {
        let mut input_hashes = BTreeMap::new();
        for p in config.input_files() {
            input_hashes.insert(p.display().to_string(), sha256_file(p)?);
        }
        let keyed = serde_json::json!({
            "command": command,
            "config": config,
            "params": params,
            "input_hashes": input_hashes,
        });
        let run_hash = hex::encode(Sha256::digest(serde_json::to_vec(&keyed)?));
        Ok(Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            params,
            input_hashes,
            outputs,
            run_hash,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_json(&dir.join(MANIFEST_FILE), self)
    }
}
