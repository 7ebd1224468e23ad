//! Run manifests: digests of inputs, outputs and config plus per-stage counts.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("stage {stage}: {input} in != {output} out + {rejected} rejected")]
    Unbalanced { stage: String, input: u64, output: u64, rejected: u64 },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: u64,
    pub output: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageCounts>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            ..Default::default()
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        let d = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(())
    }

    /// Directories are digested file by file in name order.
    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        if path.is_dir() {
            let mut names: Vec<_> = fs::read_dir(path)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            names.sort();
            for p in names {
                let d = sha256_file(&p)?;
                self.outputs.insert(p.display().to_string(), d);
            }
        } else {
            let d = sha256_file(path)?;
            self.outputs.insert(path.display().to_string(), d);
        }
        Ok(())
    }

    pub fn set_config(&mut self, bytes: &[u8]) {
        self.config_digest = Some(sha256_hex(bytes));
    }

    pub fn stage(&mut self, name: &str, input: u64, output: u64, rejected: u64) -> Result<(), ManifestError> {
        if input != output + rejected {
            return Err(ManifestError::Unbalanced { stage: name.to_string(), input, output, rejected });
        }
        self.stages.insert(name.to_string(), StageCounts { input, output, rejected });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Where the manifest for an output path goes.
pub fn manifest_path_for(output: &Path) -> std::path::PathBuf {
    if output.is_dir() {
        output.join("manifest.json")
    } else {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        s.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn stage_balance_enforced() {
        let mut m = RunManifest::new("igi dedup");
        m.stage("dedup", 10, 7, 3).unwrap();
        assert!(m.stage("clean", 10, 7, 2).is_err());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("out.tsv");
        fs::write(&f, "x").unwrap();
        let mut m = RunManifest::new("freq load");
        m.add_output(&f).unwrap();
        m.set_config(b"k = 1");
        m.stage("load", 3, 2, 1).unwrap();
        let mp = manifest_path_for(&f);
        assert!(mp.to_string_lossy().ends_with("out.tsv.manifest.json"));
        m.write(&mp).unwrap();
        assert_eq!(RunManifest::read(&mp).unwrap(), m);
        assert_eq!(manifest_path_for(dir.path()), dir.path().join("manifest.json"));
    }
}
