//! IO, file formats, and pipeline orchestration for the graspdiff engine.
//!
//! The core crate is pure computation; everything that touches the
//! filesystem lives here: OBJ ingestion, sequence/manifest/report JSON,
//! the `GDW1` weights container, flat key=value run configuration, and the
//! dataset/train/sample/eval commands the CLI exposes.

pub mod config;
pub mod manifest;
pub mod obj;
pub mod ops;
pub mod refs;
pub mod report;
pub mod runner;
pub mod seqfile;
pub mod weights;

/// Marker error for user/configuration mistakes; the CLI maps it to exit
/// code 2 (internal errors exit 1).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(anyhow::Error::new(UsageError(msg.into())))
}

/// SHA-256 hex digest of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
