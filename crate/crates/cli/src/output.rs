//! Output staging. Every artifact is built in memory first and only then
//! written, each through a temp file renamed into place, so a failed run
//! leaves no partial files behind.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Default)]
pub struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
}

/// Provenance written next to the artifacts. It holds nothing that varies
/// between identical runs; wall time and thread count go to `run.log`.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    schema_version: u32,
    seed: Option<u64>,
    config_sha256: Option<String>,
    outputs: BTreeMap<&'a str, String>,
}

pub struct RunInfo<'a> {
    pub subcommand: &'a str,
    pub seed: Option<u64>,
    pub config: Option<&'a [u8]>,
    pub threads: usize,
    pub wall_seconds: f64,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn add_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Collects what a CSV writer function produces.
    pub fn add_csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>,
    ) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        write(&mut bytes).map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every artifact, then the manifest, then the run log.
    pub fn commit(self, dir: &Path, info: &RunInfo) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let manifest = Manifest {
            tool: "esnlab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: info.subcommand,
            schema_version: crate::config::SCHEMA_VERSION,
            seed: info.seed,
            config_sha256: info.config.map(sha256_hex),
            outputs: self.files.iter().map(|(k, v)| (k.as_str(), sha256_hex(v))).collect(),
        };
        let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        manifest_bytes.push(b'\n');
        for (name, bytes) in &self.files {
            write_atomic(dir, name, bytes)?;
        }
        write_atomic(dir, "manifest.json", &manifest_bytes)?;
        let log = format!(
            "subcommand: {}\nthreads: {}\nwall_seconds: {:.3}\n",
            info.subcommand, info.threads, info.wall_seconds
        );
        write_atomic(dir, "run.log", log.as_bytes())
    }
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let target = dir.join(name);
    let fail = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", target.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(&target).map_err(|e| fail(e.error))?;
    Ok(())
}
