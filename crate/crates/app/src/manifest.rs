//! Dataset and run manifests. Manifests are the provenance record of every
//! command: they echo the configuration, list produced files, and carry
//! content hashes of the inputs. Wall-clock timing lives in a dedicated
//! field that is excluded from content hashing so repeated runs stay
//! byte-comparable.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use graspdiff_core::repr::NormStats;
use graspdiff_core::synth::ObjectSpec;
use serde::{Deserialize, Serialize};

use crate::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub file: String,
    pub action: String,
    pub handedness: String,
    pub object: ObjectSpec,
    pub seed: u64,
    /// Scripted approach length (ground-truth stage boundary hint).
    pub approach_frames: usize,
    /// Detected grasp/interaction boundary frame.
    pub boundary: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub per_cell: usize,
    pub n_frames: usize,
    pub frame_rate: f64,
    pub hand_seed: u64,
    /// Stage alignment used for the embedded normalization statistics.
    pub n_grasp: usize,
    pub n_total: usize,
    pub counts: BTreeMap<String, usize>,
    pub entries: Vec<DatasetEntry>,
    /// z-normalization statistics of the aligned full sequences (201 dims).
    pub norm_full: NormStats,
    /// Statistics of the aligned grasp clips (192 dims).
    pub norm_grasp: NormStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub file: String,
    pub seed: u64,
    pub prompt: String,
    pub action_label: String,
    pub handedness: String,
    pub object: Option<ObjectSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    /// Content hashes of consumed artifacts (weights, dataset manifest).
    pub hashes: BTreeMap<String, String>,
    pub outputs: Vec<RunOutput>,
    /// Wall-clock seconds; excluded from `content_hash`.
    pub timing_seconds: f64,
}

impl RunManifest {
    /// Hash of the manifest with timing zeroed, so two identical runs hash
    /// identically regardless of wall-clock time.
    pub fn content_hash(&self) -> String {
        let mut clone = self.clone();
        clone.timing_seconds = 0.0;
        sha256_hex(serde_json::to_string(&clone).expect("manifest serializes").as_bytes())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).context("serializing manifest")?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_hash_ignores_timing() {
        let mut m = RunManifest {
            command: "sample".into(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
            hashes: BTreeMap::new(),
            outputs: vec![],
            timing_seconds: 1.5,
        };
        let h1 = m.content_hash();
        m.timing_seconds = 99.0;
        assert_eq!(h1, m.content_hash());
        m.command = "eval".into();
        assert_ne!(h1, m.content_hash());
    }
}
