use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = "prunability.lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the stage's configuration subset and upstream artifact hashes.
    pub key: String,
    pub outputs: Vec<String>,
}

/// Every file a run wrote, with its SHA-256, plus the cache key of each stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Reads `dir/manifest.json`; a missing or unreadable manifest is empty.
    pub fn load(dir: &Path) -> Self {
        std::fs::read(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// True when `stage` was recorded under `key` and all its outputs are on
    /// disk with the recorded hashes.
    pub fn is_fresh(&self, dir: &Path, stage: &str, key: &str) -> bool {
        let Some(rec) = self.stages.get(stage) else { return false };
        rec.key == key
            && rec.outputs.iter().all(|name| {
                let want = self.files.get(name);
                want.is_some() && hash_file(&dir.join(name)).ok().as_ref() == want
            })
    }

    pub fn record(&mut self, dir: &Path, stage: &str, key: String, outputs: &[&str]) -> Result<()> {
        for name in outputs {
            self.files.insert(name.to_string(), hash_file(&dir.join(name))?);
        }
        self.stages.insert(stage.to_string(), StageRecord { key, outputs: outputs.iter().map(|s| s.to_string()).collect() });
        Ok(())
    }

    pub fn hash_of(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }
}

/// Advisory lock on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        let mut f: File = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(Error::Locked(path)),
            Err(e) => return Err(e.into()),
        };
        writeln!(f, "{}", std::process::id())?;
        Ok(Self { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn freshness_tracks_file_content() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        let mut m = Manifest::default();
        m.record(dir.path(), "s", "k1".into(), &["a.csv"]).unwrap();
        assert!(m.is_fresh(dir.path(), "s", "k1"));
        assert!(!m.is_fresh(dir.path(), "s", "k2"));
        assert!(!m.is_fresh(dir.path(), "t", "k1"));
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()), m);
        std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert!(!m.is_fresh(dir.path(), "s", "k1"));
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(lock);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }
}
