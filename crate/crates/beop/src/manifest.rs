//! Run manifests.
//!
//! Every command writes its artifacts into one output directory together
//! with a single `manifest.json`. The manifest echoes the full configuration
//! and carries a config hash that is also embedded in each output that has
//! room for it. The hash covers the command, every setting except output
//! location and worker count, and the content (not the path) of every input,
//! so identical runs agree on it wherever their files live.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, InputContext};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Settings that never influence outputs.
const UNHASHED: &[&str] = &["out", "jobs"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

pub struct Run {
    command: &'static str,
    config: Value,
    hash: String,
    seed: Option<u64>,
    inputs: Vec<FileEntry>,
    out_dir: PathBuf,
    outputs: Vec<FileEntry>,
    started: Instant,
    results: Map<String, Value>,
}

impl Run {
    /// Hashes the configuration and inputs and creates the output directory.
    /// `inputs` pairs each config key that names an input path with that
    /// path; a directory contributes every file in it.
    pub fn start(
        command: &'static str,
        args: &impl Serialize,
        seed: Option<u64>,
        inputs: &[(&str, &Path)],
        out_dir: &Path,
    ) -> CliResult<Run> {
        let config = serde_json::to_value(args).map_err(anyhow::Error::from)?;
        let mut hashed = config.as_object().cloned().unwrap_or_default();
        for key in UNHASHED {
            hashed.remove(*key);
        }
        let mut files = Vec::new();
        let mut digests = Map::new();
        for &(key, path) in inputs {
            hashed.remove(key);
            let mut these = Vec::new();
            for p in input_files(path)? {
                let bytes = std::fs::read(&p).input(format!("cannot read {}", p.display()))?;
                let sha = sha256_hex(&bytes);
                these.push(Value::String(sha.clone()));
                files.push(FileEntry { path: p, sha256: sha });
            }
            digests.insert(key.to_string(), Value::Array(these));
        }
        let canonical = json!({"command": command, "config": hashed, "inputs": digests});
        let hash = sha256_hex(canonical.to_string().as_bytes());
        std::fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Internal(anyhow::Error::from(e).context(format!("cannot create {}", out_dir.display())))
        })?;
        Ok(Run {
            command,
            config,
            hash,
            seed,
            inputs: files,
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
            results: Map::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Writes one output file into the run directory and records its digest.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<PathBuf> {
        let path = self.out_dir.join(name);
        let bytes = bytes.as_ref();
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Internal(anyhow::Error::from(e).context(format!("cannot write {}", path.display()))))?;
        self.outputs.push(FileEntry {
            path: path.clone(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Attaches a summary value to the manifest.
    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn finish(self) -> CliResult<()> {
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "config_hash": self.hash,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": self.results,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)?;
        let path = self.out_dir.join(MANIFEST_NAME);
        std::fs::write(&path, text + "\n")?;
        Ok(())
    }
}

fn input_files(path: &Path) -> CliResult<Vec<PathBuf>> {
    let meta = std::fs::metadata(path).input(format!("cannot access {}", path.display()))?;
    if !meta.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for e in std::fs::read_dir(path)? {
        let p = e?.path();
        if p.is_file() && p.file_name().is_some_and(|f| f != MANIFEST_NAME) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}
