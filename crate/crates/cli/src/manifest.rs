//! Output staging and the run manifest written next to every output.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Streaming digest of a file, for inputs too large to hold in memory.
pub fn digest_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut fs::File::open(path)?, &mut hasher)?;
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// `SOURCE_DATE_EPOCH` when set, so reruns stay byte-identical.
    pub timestamp: Option<String>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Files of one command, held until the command succeeds so a failed run
/// leaves no partial outputs behind.
pub struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
    inputs: BTreeMap<String, String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), files: BTreeMap::new(), inputs: BTreeMap::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    /// Render into a buffer with a library writer and stage the result.
    pub fn write_with(
        &mut self,
        name: impl Into<String>,
        render: impl FnOnce(&mut Vec<u8>) -> traitleak::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    pub fn json(&mut self, name: impl Into<String>, value: &impl Serialize) -> CliResult<()> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::input("json", e.to_string()))?;
        buf.push(b'\n');
        self.add(name, buf);
        Ok(())
    }

    pub fn record_input(&mut self, role: &str, digest: String) {
        self.inputs.insert(role.to_string(), digest);
    }

    pub fn commit(self, command: &str, seed: Option<u64>, config: serde_json::Value) -> CliResult<()> {
        let config_bytes = serde_json::to_vec(&config).expect("config serializes");
        let manifest = RunManifest {
            command: command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hex_digest(&config_bytes),
            seed,
            timestamp: source_date(),
            config,
            inputs: self.inputs,
            outputs: self.files.iter().map(|(k, v)| (k.clone(), hex_digest(v))).collect(),
        };
        fs::create_dir_all(&self.dir).map_err(|e| CliError::from(e).at(&self.dir))?;
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes).map_err(|e| CliError::from(e).at(&path))?;
        }
        let mut buf = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        buf.push(b'\n');
        fs::write(self.dir.join(MANIFEST_FILE), buf)?;
        Ok(())
    }
}

fn source_date() -> Option<String> {
    let secs: i64 = std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()?;
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
}
