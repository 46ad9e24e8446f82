//! Run manifest: per-stage cache keys, output digests and timings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FILE_NAME: &str = "manifest.json";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub cache_key: String,
    /// Output file name to its sha256.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    /// True when the last invocation reused the outputs instead of recomputing them.
    pub cached: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub config_digest: String,
    pub stages: BTreeMap<String, StageEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    Ok(sha256_hex(&bytes))
}

/// Hash of labelled parts; each part is length-prefixed so concatenations cannot collide.
pub fn cache_key(parts: &[(&str, &str)]) -> String {
    let mut h = Sha256::new();
    for (label, value) in parts {
        for s in [label, value] {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// Loads the manifest in `dir`, or an empty one if there is none or it cannot be read.
    pub fn load(dir: &Path) -> Self {
        std::fs::read(dir.join(FILE_NAME))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(FILE_NAME);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io(path))
    }

    /// Whether `stage` can be skipped: same key and every recorded output still on disk unchanged.
    pub fn is_fresh(&self, stage: &str, key: &str, dir: &Path) -> bool {
        let Some(entry) = self.stages.get(stage) else {
            return false;
        };
        entry.cache_key == key
            && !entry.outputs.is_empty()
            && entry
                .outputs
                .iter()
                .all(|(name, digest)| file_digest(&dir.join(name)).is_ok_and(|d| &d == digest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn cache_key_separates_parts() {
        assert_ne!(cache_key(&[("a", "bc")]), cache_key(&[("ab", "c")]));
        assert_eq!(cache_key(&[("a", "b")]), cache_key(&[("a", "b")]));
    }

    #[test]
    fn freshness_tracks_outputs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.bin"), b"1").unwrap();
        let mut m = RunManifest::default();
        m.stages.insert(
            "s".into(),
            StageEntry {
                cache_key: "k".into(),
                outputs: [("x.bin".to_string(), sha256_hex(b"1"))].into(),
                ..Default::default()
            },
        );
        assert!(m.is_fresh("s", "k", dir.path()));
        assert!(!m.is_fresh("s", "other", dir.path()));
        std::fs::write(dir.path().join("x.bin"), b"2").unwrap();
        assert!(!m.is_fresh("s", "k", dir.path()));
        std::fs::remove_file(dir.path().join("x.bin")).unwrap();
        assert!(!m.is_fresh("s", "k", dir.path()));
        m.save(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()), m);
    }
}
