//! On-disk cache of eigenbases keyed by a hash of the parameters that determine them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use lowlying::modforms::{eigen_basis, EigenBasis};

#[derive(Serialize)]
struct BasisKey {
    kind: &'static str,
    version: u32,
    weight: u32,
    truncation: usize,
    digits: u32,
    norms: bool,
}

pub fn key_hash<T: Serialize>(key: &T) -> String {
    let bytes = serde_json::to_vec(key).expect("key serializes");
    format!("{:x}", Sha256::digest(&bytes))
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<&Path>) -> std::io::Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Cache { dir: dir.map(Path::to_path_buf) })
    }

    fn path(&self, hash: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("eigenbasis-{hash}.json")))
    }

    /// Eigenbasis with harmonic weights attached; unreadable entries are rebuilt.
    pub fn eigenbasis(&self, k: u32, n: usize, digits: u32) -> lowlying::Result<EigenBasis> {
        let key = BasisKey { kind: "eigenbasis", version: 1, weight: k, truncation: n, digits, norms: true };
        let path = self.path(&key_hash(&key));
        if let Some(p) = &path {
            if let Ok(text) = fs::read_to_string(p) {
                match serde_json::from_str::<EigenBasis>(&text) {
                    Ok(b) if b.weight == k && b.truncation >= n && b.digits == digits => return Ok(b.rebuild()),
                    _ => log::warn!("cache entry {} unreadable, rebuilding", p.display()),
                }
            }
        }
        let mut b = eigen_basis(k, n, digits)?;
        b.attach_petersson_norms()?;
        if let Some(p) = &path {
            let text = serde_json::to_string(&b).expect("basis serializes");
            if let Err(e) = fs::write(p, text) {
                log::warn!("cannot write cache entry {}: {e}", p.display());
            }
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_every_field() {
        let a = BasisKey { kind: "eigenbasis", version: 1, weight: 12, truncation: 60, digits: 30, norms: true };
        let b = BasisKey { digits: 31, ..a };
        let a2 = BasisKey { kind: "eigenbasis", version: 1, weight: 12, truncation: 60, digits: 30, norms: true };
        assert_eq!(key_hash(&a), key_hash(&a2));
        assert_ne!(key_hash(&a2), key_hash(&b));
        assert_eq!(key_hash(&a).len(), 64);
    }
}
