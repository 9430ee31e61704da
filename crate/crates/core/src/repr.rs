//! Canonicalized hand-object sequence representation and its flat feature
//! layout.
//!
//! A sequence holds two hand tracks and one object track over N frames.
//! Canonical coordinates place the object at the origin at frame 0
//! (translation only; orientation is kept). Each hand contributes a 96-dim
//! block per frame and the object 9 dims:
//!
//! ```text
//! per-frame layout (full, 201 dims)
//!   left  [  0 ..  96): tau 0..3 | phi 3..9 | theta 9..33 | x_sd 33..96
//!   right [ 96 .. 192): same block structure
//!   object[192 .. 201): tau_o 192..195 | phi_o 195..201
//! hands-only layout (grasp stage, 192 dims): the two hand blocks
//! ```
//!
//! `x_sd` stores per-joint offset vectors (21 x 3) from each joint to its
//! closest point on the posed object surface; the unsigned distance is the
//! vector norm.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{closest_point, Rotation6D, TriangleMesh};
use crate::hand::{joints, HandPose, HandShape, NUM_JOINTS, THETA_DIM};
use crate::math::{Mat3, RigidTransform, Vec3};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub const HAND_BLOCK: usize = 96;
pub const OBJECT_BLOCK: usize = 9;
pub const FULL_DIM: usize = 2 * HAND_BLOCK + OBJECT_BLOCK; // 201
pub const HANDS_DIM: usize = 2 * HAND_BLOCK; // 192

// offsets within one hand block
pub const H_TAU: usize = 0;
pub const H_PHI: usize = 3;
pub const H_THETA: usize = 9;
pub const H_XSD: usize = 33;
/// Dimensions of the guided pose slice (tau, phi, theta) of a hand block.
pub const POSE33: usize = 33;

pub const LEFT_OFF: usize = 0;
pub const RIGHT_OFF: usize = HAND_BLOCK;
pub const OBJ_OFF: usize = 2 * HAND_BLOCK;

/// Per-frame feature layout of a diffusion stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Layout {
    /// Hands + object (interaction stage), 201 dims per frame.
    Full,
    /// Hands only (grasping stage), 192 dims per frame.
    HandsOnly,
}

impl Layout {
    pub fn dim(self) -> usize {
        match self {
            Layout::Full => FULL_DIM,
            Layout::HandsOnly => HANDS_DIM,
        }
    }
}

/// Object poses over N frames.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObjectTrack {
    pub tau: Vec<Vec3>,
    pub phi: Vec<Rotation6D>,
}

/// One hand over N frames.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HandTrack {
    pub tau: Vec<Vec3>,
    pub phi: Vec<Rotation6D>,
    pub theta: Vec<[f64; THETA_DIM]>,
    /// Per-joint offset vectors to the closest object-surface point.
    pub x_sd: Vec<[Vec3; NUM_JOINTS]>,
}

impl HandTrack {
    pub fn constant(pose: &HandPose, n: usize) -> HandTrack {
        HandTrack {
            tau: vec![pose.tau; n],
            phi: vec![pose.phi; n],
            theta: vec![pose.theta; n],
            x_sd: vec![[Vec3::ZERO; NUM_JOINTS]; n],
        }
    }

    pub fn pose_at(&self, i: usize) -> HandPose {
        HandPose {
            tau: self.tau[i],
            phi: self.phi[i],
            theta: self.theta[i],
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// A canonicalized two-hand + object motion sequence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SequenceSample {
    pub left: HandTrack,
    pub right: HandTrack,
    pub object: ObjectTrack,
    pub n_frames: usize,
    pub frame_rate: f64,
    /// Rigid transform taking raw world coordinates to these coordinates.
    pub canonical_transform: RigidTransform,
}

impl SequenceSample {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_frames;
        let check = |field: &'static str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::ShapeMismatch {
                    field,
                    expected: n,
                    got,
                })
            }
        };
        check("left.tau", self.left.tau.len())?;
        check("left.phi", self.left.phi.len())?;
        check("left.theta", self.left.theta.len())?;
        check("left.x_sd", self.left.x_sd.len())?;
        check("right.tau", self.right.tau.len())?;
        check("right.phi", self.right.phi.len())?;
        check("right.theta", self.right.theta.len())?;
        check("right.x_sd", self.right.x_sd.len())?;
        check("object.tau", self.object.tau.len())?;
        check("object.phi", self.object.phi.len())?;
        Ok(())
    }

    /// Object pose at frame `i` as a rigid transform.
    pub fn object_transform(&self, i: usize) -> Result<RigidTransform> {
        Ok(RigidTransform {
            rotation: self.object.phi[i].to_matrix()?,
            translation: self.object.tau[i],
        })
    }

    /// Frames `start..end` with the canonical transform carried over.
    pub fn crop(&self, start: usize, end: usize) -> SequenceSample {
        let take_hand = |h: &HandTrack| HandTrack {
            tau: h.tau[start..end].to_vec(),
            phi: h.phi[start..end].to_vec(),
            theta: h.theta[start..end].to_vec(),
            x_sd: h.x_sd[start..end].to_vec(),
        };
        SequenceSample {
            left: take_hand(&self.left),
            right: take_hand(&self.right),
            object: ObjectTrack {
                tau: self.object.tau[start..end].to_vec(),
                phi: self.object.phi[start..end].to_vec(),
            },
            n_frames: end - start,
            frame_rate: self.frame_rate,
            canonical_transform: self.canonical_transform,
        }
    }
}

/// Translate the sequence so the object sits at the origin at frame 0.
/// Relative geometry is untouched; the applied translation is recorded in
/// `canonical_transform`. Already-canonical inputs come back unchanged.
pub fn canonicalize(sample: &SequenceSample) -> SequenceSample {
    let delta = -sample.object.tau[0];
    let mut out = sample.clone();
    if delta == Vec3::ZERO {
        return out;
    }
    for t in out.left.tau.iter_mut() {
        *t += delta;
    }
    for t in out.right.tau.iter_mut() {
        *t += delta;
    }
    for t in out.object.tau.iter_mut() {
        *t += delta;
    }
    out.canonical_transform = RigidTransform::translation_only(delta)
        .compose(&sample.canonical_transform);
    out
}

/// Undo `canonical_transform`, returning the sequence in raw world
/// coordinates with an identity transform.
pub fn decanonicalize(sample: &SequenceSample) -> SequenceSample {
    let inv = sample.canonical_transform.inverse();
    let mut out = apply_rigid(sample, &inv);
    out.canonical_transform = RigidTransform::IDENTITY;
    out
}

/// Apply a rigid transform to every world-frame quantity of the sequence.
/// The stored canonical transform is updated so decanonicalize still
/// recovers the original world frame.
pub fn apply_rigid(sample: &SequenceSample, t: &RigidTransform) -> SequenceSample {
    let rot = t.rotation;
    let map_hand = |h: &HandTrack| -> HandTrack {
        HandTrack {
            tau: h.tau.iter().map(|p| t.apply(*p)).collect(),
            phi: h
                .phi
                .iter()
                .map(|r| rotate6d(&rot, r))
                .collect(),
            theta: h.theta.clone(),
            x_sd: h
                .x_sd
                .iter()
                .map(|frame| {
                    let mut o = [Vec3::ZERO; NUM_JOINTS];
                    for (dst, src) in o.iter_mut().zip(frame.iter()) {
                        *dst = rot.apply(*src);
                    }
                    o
                })
                .collect(),
        }
    };
    SequenceSample {
        left: map_hand(&sample.left),
        right: map_hand(&sample.right),
        object: ObjectTrack {
            tau: sample.object.tau.iter().map(|p| t.apply(*p)).collect(),
            phi: sample
                .object
                .phi
                .iter()
                .map(|r| rotate6d(&rot, r))
                .collect(),
        },
        n_frames: sample.n_frames,
        frame_rate: sample.frame_rate,
        canonical_transform: t.compose(&sample.canonical_transform),
    }
}

fn rotate6d(rot: &Mat3, r: &Rotation6D) -> Rotation6D {
    let c0 = rot.apply(r.col0());
    let c1 = rot.apply(r.col1());
    Rotation6D([c0.x, c0.y, c0.z, c1.x, c1.y, c1.z])
}

/// Recompute `x_sd` for both hands from the posed object mesh: for each
/// frame the mesh is placed at (tau_o, phi_o) and each joint gets the offset
/// vector to its closest surface point.
pub fn compute_sd_features(
    sample: &mut SequenceSample,
    mesh: &TriangleMesh,
    left_shape: &HandShape,
    right_shape: &HandShape,
) -> Result<()> {
    for i in 0..sample.n_frames {
        let obj = sample.object_transform(i)?;
        let obj_inv = obj.inverse();
        for (track, shape) in [
            (&mut sample.left, left_shape),
            (&mut sample.right, right_shape),
        ] {
            let pose = track.pose_at(i);
            let js = joints(shape, &pose)?;
            for (j, joint) in js.iter().enumerate() {
                let local = obj_inv.apply(*joint);
                let hit = closest_point(mesh, local)?;
                let world_closest = obj.apply(hit.point);
                track.x_sd[i][j] = world_closest - *joint;
            }
        }
    }
    Ok(())
}

/// Largest mismatch (meters) between stored `x_sd` and a fresh recompute.
pub fn sd_consistency_error(
    sample: &SequenceSample,
    mesh: &TriangleMesh,
    left_shape: &HandShape,
    right_shape: &HandShape,
) -> Result<f64> {
    let mut fresh = sample.clone();
    compute_sd_features(&mut fresh, mesh, left_shape, right_shape)?;
    let mut worst: f64 = 0.0;
    for i in 0..sample.n_frames {
        for (a, b) in [
            (&sample.left.x_sd[i], &fresh.left.x_sd[i]),
            (&sample.right.x_sd[i], &fresh.right.x_sd[i]),
        ] {
            for (va, vb) in a.iter().zip(b.iter()) {
                worst = worst.max(va.distance(*vb));
            }
        }
    }
    Ok(worst)
}

/// Per-dimension z-normalization statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> NormStats {
        NormStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Statistics over every frame of every sequence. Near-constant
    /// dimensions keep std 1 so normalization never amplifies noise.
    pub fn compute(sequences: &[&[f64]], dim: usize) -> Result<NormStats> {
        let mut count = 0usize;
        let mut mean = vec![0.0; dim];
        for s in sequences {
            if s.len() % dim != 0 {
                return Err(Error::ShapeMismatch {
                    field: "sequence",
                    expected: dim,
                    got: s.len() % dim,
                });
            }
            for frame in s.chunks_exact(dim) {
                for (m, v) in mean.iter_mut().zip(frame.iter()) {
                    *m += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyDataset);
        }
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
        let mut var = vec![0.0; dim];
        for s in sequences {
            for frame in s.chunks_exact(dim) {
                for ((v, m), x) in var.iter_mut().zip(mean.iter()).zip(frame.iter()) {
                    let d = x - m;
                    *v += d * d;
                }
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = libm::sqrt(v / count as f64);
                if s < 1e-8 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize_in_place(&self, data: &mut [f64]) {
        let d = self.dim();
        for frame in data.chunks_exact_mut(d) {
            for i in 0..d {
                frame[i] = (frame[i] - self.mean[i]) / self.std[i];
            }
        }
    }

    pub fn denormalize_in_place(&self, data: &mut [f64]) {
        let d = self.dim();
        for frame in data.chunks_exact_mut(d) {
            for i in 0..d {
                frame[i] = frame[i] * self.std[i] + self.mean[i];
            }
        }
    }
}

/// Flat z-normalized features over N frames together with the statistics
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureVector {
    pub data: Vec<f64>,
    pub n_frames: usize,
    pub layout: Layout,
    pub norm: NormStats,
}

fn write_hand_frame(out: &mut [f64], track: &HandTrack, i: usize) {
    out[H_TAU..H_TAU + 3].copy_from_slice(&track.tau[i].to_array());
    out[H_PHI..H_PHI + 6].copy_from_slice(&track.phi[i].0);
    out[H_THETA..H_THETA + THETA_DIM].copy_from_slice(&track.theta[i]);
    for (j, v) in track.x_sd[i].iter().enumerate() {
        out[H_XSD + 3 * j..H_XSD + 3 * j + 3].copy_from_slice(&v.to_array());
    }
}

fn read_hand_frame(inp: &[f64], track: &mut HandTrack) {
    track.tau.push(Vec3::from([inp[H_TAU], inp[H_TAU + 1], inp[H_TAU + 2]]));
    let mut phi = [0.0; 6];
    phi.copy_from_slice(&inp[H_PHI..H_PHI + 6]);
    track.phi.push(Rotation6D(phi));
    let mut theta = [0.0; THETA_DIM];
    theta.copy_from_slice(&inp[H_THETA..H_THETA + THETA_DIM]);
    track.theta.push(theta);
    let mut xsd = [Vec3::ZERO; NUM_JOINTS];
    for (j, v) in xsd.iter_mut().enumerate() {
        *v = Vec3::from([
            inp[H_XSD + 3 * j],
            inp[H_XSD + 3 * j + 1],
            inp[H_XSD + 3 * j + 2],
        ]);
    }
    track.x_sd.push(xsd);
}

fn empty_hand_track(n: usize) -> HandTrack {
    HandTrack {
        tau: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        x_sd: Vec::with_capacity(n),
    }
}

/// Pack a full sequence into the 201-dim layout with z-normalization.
pub fn pack(sample: &SequenceSample, norm: &NormStats) -> Result<FeatureVector> {
    sample.validate()?;
    if norm.dim() != FULL_DIM {
        return Err(Error::ShapeMismatch {
            field: "norm",
            expected: FULL_DIM,
            got: norm.dim(),
        });
    }
    let n = sample.n_frames;
    let mut data = vec![0.0; n * FULL_DIM];
    for i in 0..n {
        let frame = &mut data[i * FULL_DIM..(i + 1) * FULL_DIM];
        write_hand_frame(&mut frame[LEFT_OFF..LEFT_OFF + HAND_BLOCK], &sample.left, i);
        write_hand_frame(
            &mut frame[RIGHT_OFF..RIGHT_OFF + HAND_BLOCK],
            &sample.right,
            i,
        );
        frame[OBJ_OFF..OBJ_OFF + 3].copy_from_slice(&sample.object.tau[i].to_array());
        frame[OBJ_OFF + 3..OBJ_OFF + 9].copy_from_slice(&sample.object.phi[i].0);
    }
    norm.normalize_in_place(&mut data);
    Ok(FeatureVector {
        data,
        n_frames: n,
        layout: Layout::Full,
        norm: norm.clone(),
    })
}

/// Invert [`pack`]: denormalize and rebuild the sequence in canonical
/// coordinates (identity canonical transform).
pub fn unpack(features: &FeatureVector, frame_rate: f64) -> Result<SequenceSample> {
    if features.layout != Layout::Full {
        return Err(Error::ShapeMismatch {
            field: "layout",
            expected: FULL_DIM,
            got: features.layout.dim(),
        });
    }
    if features.data.len() != features.n_frames * FULL_DIM {
        return Err(Error::ShapeMismatch {
            field: "features.data",
            expected: features.n_frames * FULL_DIM,
            got: features.data.len(),
        });
    }
    let mut data = features.data.clone();
    features.norm.denormalize_in_place(&mut data);
    let n = features.n_frames;
    let mut left = empty_hand_track(n);
    let mut right = empty_hand_track(n);
    let mut object = ObjectTrack {
        tau: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
    };
    for i in 0..n {
        let frame = &data[i * FULL_DIM..(i + 1) * FULL_DIM];
        read_hand_frame(&frame[LEFT_OFF..LEFT_OFF + HAND_BLOCK], &mut left);
        read_hand_frame(&frame[RIGHT_OFF..RIGHT_OFF + HAND_BLOCK], &mut right);
        object
            .tau
            .push(Vec3::from([frame[OBJ_OFF], frame[OBJ_OFF + 1], frame[OBJ_OFF + 2]]));
        let mut phi = [0.0; 6];
        phi.copy_from_slice(&frame[OBJ_OFF + 3..OBJ_OFF + 9]);
        object.phi.push(Rotation6D(phi));
    }
    Ok(SequenceSample {
        left,
        right,
        object,
        n_frames: n,
        frame_rate,
        canonical_transform: RigidTransform::IDENTITY,
    })
}

/// Pack only the two hand tracks (grasping-stage layout, 192 dims).
pub fn pack_hands(left: &HandTrack, right: &HandTrack, norm: &NormStats) -> Result<FeatureVector> {
    if left.len() != right.len() {
        return Err(Error::ShapeMismatch {
            field: "right",
            expected: left.len(),
            got: right.len(),
        });
    }
    if norm.dim() != HANDS_DIM {
        return Err(Error::ShapeMismatch {
            field: "norm",
            expected: HANDS_DIM,
            got: norm.dim(),
        });
    }
    let n = left.len();
    let mut data = vec![0.0; n * HANDS_DIM];
    for i in 0..n {
        let frame = &mut data[i * HANDS_DIM..(i + 1) * HANDS_DIM];
        write_hand_frame(&mut frame[LEFT_OFF..LEFT_OFF + HAND_BLOCK], left, i);
        write_hand_frame(&mut frame[RIGHT_OFF..RIGHT_OFF + HAND_BLOCK], right, i);
    }
    norm.normalize_in_place(&mut data);
    Ok(FeatureVector {
        data,
        n_frames: n,
        layout: Layout::HandsOnly,
        norm: norm.clone(),
    })
}

/// Invert [`pack_hands`].
pub fn unpack_hands(features: &FeatureVector) -> Result<(HandTrack, HandTrack)> {
    if features.layout != Layout::HandsOnly {
        return Err(Error::ShapeMismatch {
            field: "layout",
            expected: HANDS_DIM,
            got: features.layout.dim(),
        });
    }
    let mut data = features.data.clone();
    features.norm.denormalize_in_place(&mut data);
    let n = features.n_frames;
    let mut left = empty_hand_track(n);
    let mut right = empty_hand_track(n);
    for i in 0..n {
        let frame = &data[i * HANDS_DIM..(i + 1) * HANDS_DIM];
        read_hand_frame(&frame[LEFT_OFF..LEFT_OFF + HAND_BLOCK], &mut left);
        read_hand_frame(&frame[RIGHT_OFF..RIGHT_OFF + HAND_BLOCK], &mut right);
    }
    Ok((left, right))
}

/// The (tau, phi, theta) slice of a hand pose in feature order.
pub fn pose_feature33(pose: &HandPose) -> [f64; POSE33] {
    let mut out = [0.0; POSE33];
    out[0..3].copy_from_slice(&pose.tau.to_array());
    out[3..9].copy_from_slice(&pose.phi.0);
    out[9..33].copy_from_slice(&pose.theta);
    out
}

/// Concatenated per-frame wrist positions `[left xyz, right xyz]` used by
/// the diversity metrics. Wrist position equals the hand translation.
pub fn wrist_trajectory(sample: &SequenceSample) -> Vec<f64> {
    let mut out = Vec::with_capacity(sample.n_frames * 6);
    for i in 0..sample.n_frames {
        out.extend_from_slice(&sample.left.tau[i].to_array());
        out.extend_from_slice(&sample.right.tau[i].to_array());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;
    use crate::hand::Side;
    use crate::math::vec3;
    use crate::rng;

    fn random_sample(seed: u64, n: usize) -> SequenceSample {
        let mut r = rng::chacha(seed, &[1]);
        let mut g = || rng::standard_normal(&mut r);
        let mut hand = |base: Vec3| {
            let mut t = empty_hand_track(n);
            for i in 0..n {
                let p = base + vec3(0.01 * i as f64, 0.1 * g(), 0.1 * g());
                t.tau.push(p);
                t.phi.push(
                    Rotation6D::from_matrix(&Mat3::from_axis_angle(
                        vec3(g(), g(), g()),
                        0.5 * g(),
                    )),
                );
                let mut theta = [0.0; THETA_DIM];
                for v in theta.iter_mut() {
                    *v = 0.5 * g();
                }
                t.theta.push(theta);
                let mut xsd = [Vec3::ZERO; NUM_JOINTS];
                for v in xsd.iter_mut() {
                    *v = vec3(0.01 * g(), 0.01 * g(), 0.01 * g());
                }
                t.x_sd.push(xsd);
            }
            t
        };
        let left = hand(vec3(-0.2, 0.0, 0.1));
        let right = hand(vec3(0.25, 0.05, 0.1));
        let mut object = ObjectTrack {
            tau: Vec::new(),
            phi: Vec::new(),
        };
        for i in 0..n {
            object.tau.push(vec3(1.0 + 0.002 * i as f64, 2.0, 3.0));
            object.phi.push(Rotation6D::IDENTITY);
        }
        SequenceSample {
            left,
            right,
            object,
            n_frames: n,
            frame_rate: 30.0,
            canonical_transform: RigidTransform::IDENTITY,
        }
    }

    #[test]
    fn canonicalize_is_a_pure_translation() {
        let raw = random_sample(3, 10);
        let canon = canonicalize(&raw);
        assert_eq!(canon.object.tau[0], Vec3::ZERO);
        let delta = vec3(-1.0, -2.0, -3.0);
        for i in 0..raw.n_frames {
            assert!((canon.left.tau[i] - raw.left.tau[i]).distance(delta) < 1e-12);
            assert!((canon.object.tau[i] - raw.object.tau[i]).distance(delta) < 1e-12);
        }
    }

    #[test]
    fn canonicalize_is_idempotent_on_canonical_input() {
        let canon = canonicalize(&random_sample(4, 6));
        let again = canonicalize(&canon);
        assert_eq!(canon, again);
    }

    #[test]
    fn canonicalize_preserves_pairwise_distances() {
        let raw = random_sample(5, 8);
        let canon = canonicalize(&raw);
        for i in 0..raw.n_frames {
            let d_raw = raw.left.tau[i].distance(raw.object.tau[i]);
            let d_can = canon.left.tau[i].distance(canon.object.tau[i]);
            assert!((d_raw - d_can).abs() < 1e-12);
        }
    }

    #[test]
    fn decanonicalize_round_trip() {
        let raw = random_sample(6, 7);
        let canon = canonicalize(&raw);
        let back = decanonicalize(&canon);
        for i in 0..raw.n_frames {
            assert!(back.left.tau[i].distance(raw.left.tau[i]) < 1e-12);
            assert!(back.object.tau[i].distance(raw.object.tau[i]) < 1e-12);
        }
        let recanon = canonicalize(&back);
        for i in 0..raw.n_frames {
            assert!(recanon.left.tau[i].distance(canon.left.tau[i]) < 1e-12);
        }
    }

    #[test]
    fn canonicalize_commutes_with_cropping_from_frame_zero() {
        let raw = random_sample(9, 12);
        let a = canonicalize(&raw.crop(0, 8));
        let b = canonicalize(&raw).crop(0, 8);
        for i in 0..8 {
            assert!(a.left.tau[i].distance(b.left.tau[i]) < 1e-12);
            assert!(a.object.tau[i].distance(b.object.tau[i]) < 1e-12);
        }
    }

    #[test]
    fn pack_unpack_round_trip() {
        let sample = canonicalize(&random_sample(7, 5));
        // non-trivial stats
        let fv_id = pack(&sample, &NormStats::identity(FULL_DIM)).unwrap();
        let mut stats = NormStats::identity(FULL_DIM);
        for i in 0..FULL_DIM {
            stats.mean[i] = 0.01 * i as f64;
            stats.std[i] = 0.5 + 0.01 * i as f64;
        }
        let fv = pack(&sample, &stats).unwrap();
        let back = unpack(&fv, sample.frame_rate).unwrap();
        for i in 0..sample.n_frames {
            assert!(back.left.tau[i].distance(sample.left.tau[i]) < 1e-9);
            assert!(back.right.tau[i].distance(sample.right.tau[i]) < 1e-9);
            for j in 0..NUM_JOINTS {
                assert!(back.left.x_sd[i][j].distance(sample.left.x_sd[i][j]) < 1e-9);
            }
        }
        assert_eq!(fv.data.len(), sample.n_frames * 201);
        // identity stats leave raw values in place
        let frame0 = &fv_id.data[0..FULL_DIM];
        assert_eq!(frame0[0], sample.left.tau[0].x);
        assert_eq!(frame0[OBJ_OFF + 2], sample.object.tau[0].z);
    }

    #[test]
    fn per_frame_dimension_is_201() {
        assert_eq!(FULL_DIM, 201);
        assert_eq!(HANDS_DIM, 192);
        assert_eq!(HAND_BLOCK, 3 + 6 + 24 + 63);
    }

    #[test]
    fn pack_reports_offending_field() {
        let mut sample = canonicalize(&random_sample(8, 5));
        sample.right.theta.pop();
        match pack(&sample, &NormStats::identity(FULL_DIM)) {
            Err(Error::ShapeMismatch { field, .. }) => assert_eq!(field, "right.theta"),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn sd_features_on_sphere_object() {
        let mesh = icosphere(0.05, 2);
        let left_shape = HandShape::synthetic(Side::Left, 11);
        let right_shape = HandShape::synthetic(Side::Right, 11);
        let n = 3;
        let mut sample = SequenceSample {
            left: HandTrack::constant(
                &HandPose {
                    tau: vec3(-0.3, 0.0, 0.0),
                    ..HandPose::REST
                },
                n,
            ),
            right: HandTrack::constant(
                &HandPose {
                    tau: vec3(2.0, 0.0, 0.0),
                    ..HandPose::REST
                },
                n,
            ),
            object: ObjectTrack {
                tau: vec![Vec3::ZERO; n],
                phi: vec![Rotation6D::IDENTITY; n],
            },
            n_frames: n,
            frame_rate: 30.0,
            canonical_transform: RigidTransform::IDENTITY,
        };
        compute_sd_features(&mut sample, &mesh, &left_shape, &right_shape).unwrap();
        // right wrist sits at (2,0,0); closest sphere point ~(0.05,0,0)
        let xsd = sample.right.x_sd[0][0];
        assert!(xsd.distance(vec3(-1.95, 0.0, 0.0)) <= mesh.max_edge_length());
        // norm equals the unsigned joint-to-surface distance
        let hit = closest_point(&mesh, vec3(2.0, 0.0, 0.0)).unwrap();
        assert!((xsd.norm() - hit.distance).abs() < 1e-9);
        let err = sd_consistency_error(&sample, &mesh, &left_shape, &right_shape).unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn sd_magnitude_invariant_under_joint_rigid_motion() {
        let mesh = icosphere(0.05, 2);
        let left_shape = HandShape::synthetic(Side::Left, 11);
        let right_shape = HandShape::synthetic(Side::Right, 11);
        let mut sample = canonicalize(&random_sample(10, 4));
        // place hands near the object for meaningful distances
        for i in 0..sample.n_frames {
            sample.left.tau[i] = vec3(-0.15, 0.02 * i as f64, 0.0);
            sample.right.tau[i] = vec3(0.18, 0.0, 0.01 * i as f64);
        }
        compute_sd_features(&mut sample, &mesh, &left_shape, &right_shape).unwrap();
        let t = RigidTransform {
            rotation: Mat3::from_axis_angle(vec3(0.2, 1.0, -0.4), 1.1),
            translation: vec3(0.3, -0.2, 0.5),
        };
        let mut moved = apply_rigid(&sample, &t);
        let stored: Vec<f64> = moved
            .left
            .x_sd
            .iter()
            .flat_map(|f| f.iter().map(|v| v.norm()))
            .collect();
        compute_sd_features(&mut moved, &mesh, &left_shape, &right_shape).unwrap();
        let recomputed: Vec<f64> = moved
            .left
            .x_sd
            .iter()
            .flat_map(|f| f.iter().map(|v| v.norm()))
            .collect();
        for (a, b) in stored.iter().zip(recomputed.iter()) {
            assert!((a - b).abs() < 1e-9, "|x_sd| changed: {a} vs {b}");
        }
    }
}
