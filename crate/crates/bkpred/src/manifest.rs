//! Per-run manifests: what ran, with which settings, on which inputs, and
//! the SHA-256 of every output. Manifests hold no timestamps or absolute
//! paths, so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub bkpred_version: String,
    pub core_version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Input role (or file name for multi-file inputs) to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory to content hash.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Hash of a file, or of a directory's files in name order.
pub fn sha256_path(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return sha256_file(path);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
        h.update([0]);
        h.update(sha256_file(&f)?.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            bkpred_version: env!("CARGO_PKG_VERSION").into(),
            core_version: bkpred_core::VERSION.into(),
            seed: cfg.seed()?,
            config_sha256: cfg.hash(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.into(), sha256_path(path)?);
        Ok(())
    }

    pub fn output(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.outputs.insert(rel.to_string_lossy().replace('\\', "/"), sha256_file(path)?);
        Ok(())
    }

    pub fn file_name(command: &str) -> String {
        format!("manifest.{command}.json")
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let p = out_dir.join(Self::file_name(&self.command));
        write_json(&p, self)?;
        Ok(p)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_runs_identical_manifests() {
        let cfg = RunConfig { seed: Some(3), ..RunConfig::default() };
        let mk = |dir: &Path| {
            let f = dir.join("a.csv");
            std::fs::write(&f, "x\n1\n").unwrap();
            let mut m = Manifest::new("evaluate", &cfg).unwrap();
            m.input("scores", &f).unwrap();
            m.output(dir, &f).unwrap();
            m.write(dir).unwrap();
            std::fs::read(dir.join("manifest.evaluate.json")).unwrap()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(mk(a.path()), mk(b.path()));
        let m = Manifest::read(&a.path().join("manifest.evaluate.json")).unwrap();
        assert_eq!(m.outputs.keys().collect::<Vec<_>>(), ["a.csv"]);
        assert_eq!(m.outputs["a.csv"], hex::encode(Sha256::digest(b"x\n1\n")));
    }
}
