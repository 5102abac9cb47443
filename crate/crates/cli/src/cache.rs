//! On-disk cache of class groups and `L(2, chi_D)` values.
//!
//! One file per key holding a single JSON line. Writers go through a
//! temporary file and a rename, so readers see either nothing or a complete
//! entry; with several writers the last rename wins. Anything unreadable is
//! treated as absent: the cache only ever saves work.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub version: u32,
    pub payload: Value,
}

impl CacheEntry {
    pub fn new(key: impl Into<String>, payload: Value) -> Self {
        Self { key: key.into(), version: CACHE_VERSION, payload }
    }
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// `$SYSTOLE_CACHE_DIR`, else `$XDG_CACHE_HOME/systole`, else
/// `$HOME/.cache/systole`.
pub fn default_dir() -> Option<PathBuf> {
    if let Some(d) = std::env::var_os("SYSTOLE_CACHE_DIR").filter(|d| !d.is_empty()) {
        return Some(PathBuf::from(d));
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
        return Some(PathBuf::from(d).join("systole"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("systole"))
}

fn file_name(key: &str) -> String {
    let safe: String =
        key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("{safe}.jsonl")
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Cache {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(file_name(key))
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let line = text.lines().next()?;
        let entry: CacheEntry = serde_json::from_str(line).ok()?;
        (entry.key == key && entry.version == CACHE_VERSION).then_some(entry)
    }

    pub fn put(&self, entry: &CacheEntry) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            file_name(&entry.key),
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(line.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, self.path(&entry.key))
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }
}
