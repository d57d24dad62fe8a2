use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// sha256 of each input file, keyed by the flag that named it.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct ManifestBuilder {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn start(command: &str, out_dir: &Path, config: impl Serialize) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(ManifestBuilder {
            out_dir: out_dir.to_owned(),
            manifest: RunManifest {
                command: command.to_owned(),
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                config: serde_json::to_value(config)?,
                seeds: BTreeMap::new(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                started_at: now(),
                finished_at: String::new(),
            },
        })
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<&mut Self> {
        self.manifest.inputs.insert(name.to_owned(), sha256_file(path)?);
        Ok(self)
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.manifest.seeds.insert(name.to_owned(), seed);
        self
    }

    /// Path of an output file inside the run directory.
    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    pub fn finish(mut self, outputs: &[&str]) -> Result<()> {
        for f in outputs {
            self.manifest.outputs.insert((*f).to_owned(), sha256_file(&self.out_dir.join(f))?);
        }
        self.manifest.finished_at = now();
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
