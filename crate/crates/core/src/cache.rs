//! Shared on-disk cache for generation and embedding results.
//!
//! Layout: one JSON file per key under `{root}/{namespace}/{sha256-hex}.json`.
//! The `gen` namespace holds chat rewrites keyed by
//! `sha256(model ∥ 0x00 ∥ style_tag ∥ 0x00 ∥ text)`; the `emb` namespace holds
//! embedding vectors keyed by `sha256(model ∥ 0x00 ∥ text)`.
//!
//! Writes go through a temp file in the same directory followed by a rename,
//! so concurrent readers never observe a partial entry. A per-key in-process
//! lock makes [`DiskCache::get_or_compute`] single-flight: for a fixed key at
//! most one live computation (endpoint request) happens per process run.
//! Reads bump the entry's mtime, which doubles as the LRU clock for
//! [`DiskCache::gc`].

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{AuditError, Result};

/// Namespace for chat-generation entries.
pub const GEN_NS: &str = "gen";
/// Namespace for embedding entries.
pub const EMB_NS: &str = "emb";

/// Filesystem cache handle. Cheap to clone-by-reference across worker
/// threads; all interior state is synchronized.
pub struct DiskCache {
    root: PathBuf,
    touched: Mutex<HashSet<PathBuf>>,
    key_locks: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DiskCache {
            root: root.into(),
            touched: Mutex::new(HashSet::new()),
            key_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Cache key for a generation entry.
    pub fn generation_key(model_id: &str, style_tag: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(style_tag.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hex(&hasher.finalize())
    }

    /// Cache key for an embedding entry.
    pub fn embedding_key(model_id: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hex(&hasher.finalize())
    }

    /// Look up an entry. A hit marks the entry as touched by this run and
    /// refreshes its LRU timestamp. Corrupt entries are treated as misses.
    pub fn get<T: DeserializeOwned>(&self, namespace: &str, key: &str) -> Option<T> {
        let path = self.entry_path(namespace, key);
        let bytes = fs::read(&path).ok()?;
        let value = serde_json::from_slice(&bytes).ok()?;
        self.mark_touched(&path);
        let _ = touch_mtime(&path);
        Some(value)
    }

    /// Insert an entry atomically (temp file + rename).
    pub fn put<T: Serialize>(&self, namespace: &str, key: &str, value: &T) -> Result<()> {
        let path = self.entry_path(namespace, key);
        let dir = path.parent().expect("entry path has a parent");
        fs::create_dir_all(dir).map_err(|err| AuditError::io(dir, err))?;
        let tmp = dir.join(format!(
            ".{}.tmp-{}-{:?}",
            key,
            std::process::id(),
            std::thread::current().id()
        ));
        let bytes = serde_json::to_vec(value)
            .map_err(|err| AuditError::Invalid(format!("serializing cache entry: {err}")))?;
        fs::write(&tmp, bytes).map_err(|err| AuditError::io(&tmp, err))?;
        fs::rename(&tmp, &path).map_err(|err| AuditError::io(&path, err))?;
        self.mark_touched(&path);
        Ok(())
    }

    /// Fetch the entry for `key`, computing and storing it on a miss.
    ///
    /// Concurrent callers with the same key serialize on a per-key lock, so
    /// `compute` runs at most once per key per process even under races.
    pub fn get_or_compute<T, F>(&self, namespace: &str, key: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let path = self.entry_path(namespace, key);
        let lock = self.key_lock(&path);
        let _guard = lock.lock().expect("cache key lock poisoned");
        if let Some(hit) = self.get::<T>(namespace, key) {
            return Ok(hit);
        }
        let value = compute()?;
        self.put(namespace, key, &value)?;
        Ok(value)
    }

    /// Evict least-recently-used entries until the cache holds at most
    /// `max_bytes`. Entries touched by this run are never evicted. Returns
    /// the number of bytes reclaimed.
    pub fn gc(&self, max_bytes: u64) -> Result<u64> {
        let mut entries = Vec::new();
        let mut total: u64 = 0;
        for ns_entry in read_dir_if_exists(&self.root)? {
            if !ns_entry.is_dir() {
                continue;
            }
            for path in read_dir_if_exists(&ns_entry)? {
                if path.extension().is_some_and(|ext| ext == "json") {
                    let meta = fs::metadata(&path).map_err(|err| AuditError::io(&path, err))?;
                    let mtime = meta.modified().map_err(|err| AuditError::io(&path, err))?;
                    total += meta.len();
                    entries.push((path, meta.len(), mtime));
                }
            }
        }
        if total <= max_bytes {
            return Ok(0);
        }
        // Oldest first; path as tiebreaker keeps eviction deterministic.
        entries.sort_by(|a, b| a.2.cmp(&b.2).then_with(|| a.0.cmp(&b.0)));
        let touched = self.touched.lock().expect("touched set poisoned");
        let mut reclaimed = 0;
        for (path, len, _) in entries {
            if total <= max_bytes {
                break;
            }
            if touched.contains(&path) {
                continue;
            }
            fs::remove_file(&path).map_err(|err| AuditError::io(&path, err))?;
            total -= len;
            reclaimed += len;
        }
        Ok(reclaimed)
    }

    fn entry_path(&self, namespace: &str, key: &str) -> PathBuf {
        self.root.join(namespace).join(format!("{key}.json"))
    }

    fn mark_touched(&self, path: &Path) {
        self.touched
            .lock()
            .expect("touched set poisoned")
            .insert(path.to_path_buf());
    }

    fn key_lock(&self, path: &Path) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().expect("key lock map poisoned");
        locks.entry(path.to_path_buf()).or_default().clone()
    }
}

fn read_dir_if_exists(dir: &Path) -> Result<Vec<PathBuf>> {
    match fs::read_dir(dir) {
        Ok(iter) => {
            let mut paths = Vec::new();
            for entry in iter {
                let entry = entry.map_err(|err| AuditError::io(dir, err))?;
                paths.push(entry.path());
            }
            Ok(paths)
        }
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(err) => Err(AuditError::io(dir, err)),
    }
}

fn touch_mtime(path: &Path) -> std::io::Result<()> {
    let file = fs::OpenOptions::new().write(true).open(path)?;
    file.set_modified(SystemTime::now())
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for byte in bytes {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
