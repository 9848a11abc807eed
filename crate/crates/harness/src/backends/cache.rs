//! Content-addressed response cache.
//!
//! Entries live at `<dir>/<key[..2]>/<key>.json`, where the key is the
//! SHA-256 of the backend id and the canonical request bytes. Entries are
//! immutable: a second writer for the same key keeps the first file.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_parts;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub backend_id: String,
    pub created_at: String,
    pub response: serde_json::Value,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, Vec<u8>>>,
}

impl ResponseCache {
    /// Process-local cache with no persistence.
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn persistent(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir: Some(dir), memory: RwLock::default() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(backend_id: &str, canonical_request: &[u8]) -> String {
        sha256_parts(&[backend_id.as_bytes(), canonical_request])
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(&key[..2]).join(format!("{key}.json")))
    }

    /// Stored response bytes for `key`, if any.
    pub fn get(&self, key: &str) -> Option<Vec<u8>> {
        if let Some(hit) = self.memory.read().expect("cache lock").get(key) {
            return Some(hit.clone());
        }
        let path = self.path_for(key)?;
        let bytes = fs::read(&path).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        if entry.key != key {
            return None;
        }
        let response = serde_json::to_vec(&entry.response).ok()?;
        self.memory.write().expect("cache lock").insert(key.to_string(), response.clone());
        Some(response)
    }

    pub fn put(&self, key: &str, backend_id: &str, response: &serde_json::Value) -> Result<()> {
        let bytes = serde_json::to_vec(response).expect("serializable value");
        self.memory.write().expect("cache lock").entry(key.to_string()).or_insert(bytes);
        let Some(path) = self.path_for(key) else { return Ok(()) };
        if path.exists() {
            return Ok(());
        }
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let entry = CacheEntry {
            key: key.to_string(),
            backend_id: backend_id.to_string(),
            created_at: chrono::Utc::now().to_rfc3339(),
            response: response.clone(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
        serde_json::to_writer(&mut tmp, &entry).expect("serializable entry");
        tmp.flush().map_err(|e| Error::io(tmp.path(), e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(()),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => Ok(()),
            Err(e) => Err(Error::io(&path, e.error)),
        }
    }

    pub fn len_on_disk(&self) -> usize {
        let Some(dir) = &self.dir else { return 0 };
        fs::read_dir(dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|shard| fs::read_dir(shard.path()).ok())
            .map(|entries| entries.count())
            .sum()
    }
}
