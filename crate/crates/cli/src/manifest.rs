//! Run metadata written next to every output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub parameters: Value,
    pub seeds: BTreeMap<String, u64>,
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub results: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Sidecar manifest path for a single output file: `<out>.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Collects metadata while a command runs.
pub struct Run {
    manifest: RunManifest,
}

impl Run {
    pub fn new(command: &str, parameters: impl Serialize) -> Self {
        Self {
            manifest: RunManifest {
                tool: "fmds",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                parameters: serde_json::to_value(parameters).unwrap_or(Value::Null),
                seeds: BTreeMap::new(),
                threads: crate::configured_threads(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                results: BTreeMap::new(),
                warnings: Vec::new(),
                started_at: now(),
                finished_at: String::new(),
            },
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.insert(name.to_string(), value);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.outputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.manifest.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        eprintln!("warning: {message}");
        self.manifest.warnings.push(message);
    }

    pub fn finish(mut self, path: &Path) -> Result<RunManifest> {
        self.manifest.finished_at = now();
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/d.csv")), PathBuf::from("out/d.csv.manifest.json"));
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(sha256_file(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
