//! Output directories, artifact digests, and the run manifest log.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use lfa_core::metrics::DTW_NORMALIZATION;
use lfa_core::pseudo::WEIGHT_DISTRIBUTION;
use serde::{Deserialize, Serialize};

use crate::attacks::AGGREGATION;
use crate::backends::{BackendSet, Role};
use crate::config::Config;
use crate::digest::{sha256_hex, sha256_parts};
use crate::error::{Error, Result};

pub const LOCK_FILE: &str = ".lfa.lock";
pub const RUN_LOG: &str = "runs.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
    }
}

/// Method choices applied in this run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decisions {
    pub weight_distribution: String,
    pub aggregation: String,
    pub dtw_normalization: String,
    pub context_source: String,
}

impl Default for Decisions {
    fn default() -> Self {
        Self {
            weight_distribution: WEIGHT_DISTRIBUTION.into(),
            aggregation: AGGREGATION.into(),
            dtw_normalization: DTW_NORMALIZATION.into(),
            context_source: "original".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRecord {
    pub backend_id: String,
    pub base: String,
    pub model: String,
    pub requests: u64,
    pub cache_hits: u64,
    pub network_attempts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub seed: u64,
    pub created_at: String,
    pub config: Config,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, String>,
    pub backends: BTreeMap<Role, BackendRecord>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub decisions: Decisions,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            run_id: String::new(),
            command: command.to_string(),
            seed: config.seed,
            created_at: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            parameters: BTreeMap::new(),
            backends: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            decisions: Decisions::default(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(Artifact::of_file(path)?);
        Ok(self)
    }

    pub fn record_backends(&mut self, backends: &BackendSet) {
        let stats = backends.stats();
        for (role, client) in Role::ALL.iter().filter_map(|r| backends.get(*r).ok().map(|c| (*r, c))) {
            let s = stats[&role];
            let d = client.descriptor();
            self.backends.insert(
                role,
                BackendRecord {
                    backend_id: client.backend_id().to_string(),
                    base: d.base.clone(),
                    model: d.model.clone(),
                    requests: s.requests,
                    cache_hits: s.cache_hits,
                    network_attempts: s.network_attempts,
                },
            );
        }
    }

    fn seal(&mut self) {
        let mut parts: Vec<&[u8]> = vec![self.command.as_bytes(), self.created_at.as_bytes()];
        for a in self.inputs.iter().chain(&self.outputs) {
            parts.push(a.sha256.as_bytes());
        }
        self.run_id = sha256_parts(&parts)[..16].to_string();
    }
}

/// An output directory held for the duration of one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates the directory if needed and takes its lock.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { root, lock })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(root)),
            Err(e) => Err(Error::io(&lock, e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `name` atomically and returns its digest record.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<Artifact> {
        let path = self.root.join(name);
        let parent = path.parent().unwrap_or(&self.root);
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
        tmp.write_all(bytes).map_err(|e| Error::io(&path, e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(Artifact { path: path.display().to_string(), sha256: sha256_hex(bytes) })
    }

    /// Seals the manifest and appends it to the run log.
    pub fn append_manifest(&self, manifest: &mut RunManifest) -> Result<()> {
        manifest.seal();
        let path = self.root.join(RUN_LOG);
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        let mut line = serde_json::to_vec(manifest).expect("serializable manifest");
        line.push(b'\n');
        f.write_all(&line).map_err(|e| Error::io(&path, e))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
