//! Output directories and their `manifest.json`.
//!
//! Data files never carry wall-clock values; timings live in the manifest
//! only, next to a SHA-256 of every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub timings_ms: BTreeMap<String, f64>,
    pub suites: Vec<SuiteRecord>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format {
            path,
            reason: e.to_string(),
        })
    }

    /// Artifacts whose content no longer matches the recorded checksum.
    pub fn verify(&self, dir: &Path) -> CliResult<Vec<String>> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            let bytes = std::fs::read(&p).map_err(CliError::io(&p))?;
            if sha256_hex(&bytes) != a.sha256 {
                bad.push(a.path.clone());
            }
        }
        Ok(bad)
    }
}

pub struct OutDir {
    root: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

impl OutDir {
    /// `settings` is hashed together with `command` into the config hash.
    pub fn create(root: &Path, command: &str, settings: &serde_json::Value) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(CliError::io(root))?;
        let canonical = serde_json::to_string(&serde_json::json!({ "command": command, "settings": settings }))
            .expect("json value");
        let versions = BTreeMap::from([
            ("horizonlab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("horizonlab-core".to_string(), horizonlab_core::VERSION.to_string()),
        ]);
        Ok(Self {
            root: root.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                config_hash: sha256_hex(canonical.as_bytes()),
                versions,
                inputs: Vec::new(),
                artifacts: Vec::new(),
                timings_ms: BTreeMap::new(),
                suites: Vec::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.display().to_string());
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(&path, contents).map_err(CliError::io(&path))?;
        self.manifest.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.manifest
            .timings_ms
            .insert(label.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn suite(&mut self, name: &str, pass: bool) {
        self.manifest.suites.push(SuiteRecord {
            name: name.to_string(),
            pass,
        });
    }

    pub fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest
            .timings_ms
            .insert("total".into(), self.started.elapsed().as_secs_f64() * 1e3);
        let path = self.root.join(MANIFEST);
        let text = crate::format::to_json(&self.manifest);
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(self.manifest)
    }
}
