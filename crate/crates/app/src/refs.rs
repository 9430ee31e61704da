//! Grasp reference files: per-hand target pose plus active-side flags.
//! `{"active": ["right"], "left": null, "right": {"tau": [...],
//!   "phi": [...], "theta": [...]}}`

use std::path::Path;

use anyhow::{Context, Result};
use graspdiff_core::guidance::GraspReference;
use graspdiff_core::hand::HandPose;
use serde::{Deserialize, Serialize};

use crate::usage;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraspRefFile {
    /// Active sides; defaults to every side with a pose present.
    #[serde(default)]
    pub active: Option<Vec<String>>,
    pub left: Option<HandPose>,
    pub right: Option<HandPose>,
}

impl GraspRefFile {
    pub fn to_reference(&self) -> Result<GraspReference> {
        let (mut left, mut right) = (self.left, self.right);
        if let Some(active) = &self.active {
            for side in active {
                if side != "left" && side != "right" {
                    return usage(format!("grasp reference: unknown side {side:?}"));
                }
            }
            if !active.iter().any(|s| s == "left") {
                left = None;
            }
            if !active.iter().any(|s| s == "right") {
                right = None;
            }
        }
        let reference = GraspReference { left, right };
        reference
            .validate()
            .map_err(|e| anyhow::Error::new(crate::UsageError(e.to_string())))?;
        Ok(reference)
    }

    pub fn from_reference(r: &GraspReference) -> GraspRefFile {
        let mut active = Vec::new();
        if r.left.is_some() {
            active.push("left".to_string());
        }
        if r.right.is_some() {
            active.push("right".to_string());
        }
        GraspRefFile {
            active: Some(active),
            left: r.left,
            right: r.right,
        }
    }
}

pub fn read_grasp_ref(path: &Path) -> Result<GraspReference> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: GraspRefFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_reference()
}

pub fn write_grasp_ref(path: &Path, r: &GraspReference) -> Result<()> {
    let json = serde_json::to_string_pretty(&GraspRefFile::from_reference(r))?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}
