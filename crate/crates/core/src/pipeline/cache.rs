use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Written last into every stage directory; lists each file with its digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    /// Digest of the stage name, config hash and upstream keys.
    pub key: String,
    pub files: BTreeMap<String, String>,
}

pub fn stage_key(stage: &str, config_hash: &str, upstream: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    h.update([0]);
    h.update(config_hash.as_bytes());
    for u in upstream {
        h.update([0]);
        h.update(u.as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// JSON artifact tagged with the config that produced it.
#[derive(Serialize, Deserialize)]
struct Artifact<T> {
    config_hash: String,
    body: T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, config_hash: &str, body: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Artifact {
        config_hash: config_hash.to_string(),
        body,
    })?;
    write_file(&dir.join(name), text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, config_hash: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let a: Artifact<T> = serde_json::from_str(&text)?;
    if a.config_hash != config_hash {
        return Err(Error::ConfigMismatch {
            path: path.to_path_buf(),
            expected: config_hash.to_string(),
            found: a.config_hash,
        });
    }
    Ok(a.body)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn digest_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if name == MANIFEST || !path.is_file() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.insert(name, sha256_hex(&bytes));
    }
    Ok(files)
}

pub enum CacheState {
    /// Manifest matches and every file verifies.
    Fresh,
    Stale,
}

/// Checks a stage directory. Artifacts from another config are refused rather
/// than silently replaced.
pub fn check_stage(dir: &Path, config_hash: &str, key: &str) -> Result<CacheState> {
    let Some(m) = read_manifest(dir)? else {
        return Ok(CacheState::Stale);
    };
    if m.config_hash != config_hash {
        return Err(Error::ConfigMismatch {
            path: dir.join(MANIFEST),
            expected: config_hash.to_string(),
            found: m.config_hash,
        });
    }
    if m.key != key || digest_dir(dir)? != m.files {
        return Ok(CacheState::Stale);
    }
    Ok(CacheState::Fresh)
}

/// Clears `dir`, lets `produce` fill it, then seals it with a manifest.
pub fn rebuild_stage(
    dir: &Path,
    stage: &str,
    config_hash: &str,
    key: &str,
    produce: impl FnOnce(&Path) -> Result<()>,
) -> Result<Manifest> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    produce(dir)?;
    let m = Manifest {
        stage: stage.to_string(),
        config_hash: config_hash.to_string(),
        key: key.to_string(),
        files: digest_dir(dir)?,
    };
    write_file(&dir.join(MANIFEST), serde_json::to_string_pretty(&m)?.as_bytes())?;
    Ok(m)
}

/// Every file under `root` with its digest, keyed by relative path.
pub fn tree_digest(root: &Path) -> Result<BTreeMap<PathBuf, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), sha256_hex(&bytes));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_lifecycle() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("s");
        let key = stage_key("s", "cfg", &["up"]);
        assert!(matches!(check_stage(&dir, "cfg", &key).unwrap(), CacheState::Stale));
        rebuild_stage(&dir, "s", "cfg", &key, |d| write_json(d, "a.json", "cfg", &vec![1, 2])).unwrap();
        assert!(matches!(check_stage(&dir, "cfg", &key).unwrap(), CacheState::Fresh));
        assert_eq!(read_json::<Vec<i32>>(&dir.join("a.json"), "cfg").unwrap(), vec![1, 2]);
        assert!(matches!(read_json::<Vec<i32>>(&dir.join("a.json"), "other"), Err(Error::ConfigMismatch { .. })));
        assert!(matches!(check_stage(&dir, "other", &key), Err(Error::ConfigMismatch { .. })));
        // Upstream change or tampering invalidates the cache.
        assert!(matches!(check_stage(&dir, "cfg", &stage_key("s", "cfg", &["x"])).unwrap(), CacheState::Stale));
        fs::write(dir.join("a.json"), "{}").unwrap();
        assert!(matches!(check_stage(&dir, "cfg", &key).unwrap(), CacheState::Stale));
    }

    #[test]
    fn keys_depend_on_every_part() {
        let k = stage_key("a", "b", &["c"]);
        assert_ne!(k, stage_key("a", "b", &["d"]));
        assert_ne!(k, stage_key("a", "x", &["c"]));
        assert_ne!(k, stage_key("ab", "", &["c"]));
        assert_eq!(k.len(), 16);
    }
}
