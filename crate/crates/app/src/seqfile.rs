//! Sequence JSON files:
//! `{frame_rate, n_frames, canonical_transform, left, right, object,
//!   text_simple, text_detailed, action_label, handedness}`.

use std::path::Path;

use anyhow::{Context, Result};
use graspdiff_core::geometry::Rotation6D;
use graspdiff_core::math::{RigidTransform, Vec3};
use graspdiff_core::repr::{HandTrack, ObjectTrack, SequenceSample};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectTrackDto {
    pub tau_o: Vec<Vec3>,
    pub phi_o: Vec<Rotation6D>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceFile {
    pub frame_rate: f64,
    pub n_frames: usize,
    pub canonical_transform: RigidTransform,
    pub left: HandTrack,
    pub right: HandTrack,
    pub object: ObjectTrackDto,
    pub text_simple: String,
    pub text_detailed: String,
    pub action_label: String,
    pub handedness: String,
}

impl SequenceFile {
    pub fn from_sample(
        sample: &SequenceSample,
        text_simple: &str,
        text_detailed: &str,
        action_label: &str,
        handedness: &str,
    ) -> SequenceFile {
        SequenceFile {
            frame_rate: sample.frame_rate,
            n_frames: sample.n_frames,
            canonical_transform: sample.canonical_transform,
            left: sample.left.clone(),
            right: sample.right.clone(),
            object: ObjectTrackDto {
                tau_o: sample.object.tau.clone(),
                phi_o: sample.object.phi.clone(),
            },
            text_simple: text_simple.to_string(),
            text_detailed: text_detailed.to_string(),
            action_label: action_label.to_string(),
            handedness: handedness.to_string(),
        }
    }

    pub fn to_sample(&self) -> Result<SequenceSample> {
        let sample = SequenceSample {
            left: self.left.clone(),
            right: self.right.clone(),
            object: ObjectTrack {
                tau: self.object.tau_o.clone(),
                phi: self.object.phi_o.clone(),
            },
            n_frames: self.n_frames,
            frame_rate: self.frame_rate,
            canonical_transform: self.canonical_transform,
        };
        sample
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid sequence file: {e}"))?;
        Ok(sample)
    }
}

pub fn write_sequence(path: &Path, file: &SequenceFile) -> Result<()> {
    let json = serde_json::to_string(file).context("serializing sequence")?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

pub fn read_sequence(path: &Path) -> Result<SequenceFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use graspdiff_core::hand::{HandShape, Side};
    use graspdiff_core::synth::{
        generate_sequence, Action, ActionScript, Handedness, ObjectSpec, PrimitiveKind,
    };

    #[test]
    fn json_round_trip_is_lossless() {
        let l = HandShape::synthetic(Side::Left, 11);
        let r = HandShape::synthetic(Side::Right, 11);
        let g = generate_sequence(
            &ActionScript {
                action: Action::Lift,
                handedness: Handedness::Right,
                object: ObjectSpec::standard(PrimitiveKind::Sphere),
                seed: 3,
            },
            &l,
            &r,
            60,
            30.0,
        )
        .unwrap();
        let file = SequenceFile::from_sample(&g.sample, &g.text.simple, &g.text.detailed, "lift", "right");
        let json = serde_json::to_string(&file).unwrap();
        let back: SequenceFile = serde_json::from_str(&json).unwrap();
        let sample = back.to_sample().unwrap();
        assert_eq!(sample, g.sample, "float round-trip must be exact");
        // and serialization is deterministic
        let json2 = serde_json::to_string(&SequenceFile::from_sample(
            &g.sample, &g.text.simple, &g.text.detailed, "lift", "right",
        ))
        .unwrap();
        assert_eq!(json, json2);
    }
}
