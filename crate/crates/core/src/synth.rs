//! Procedural desk-scale training data: one or two hands approach a static
//! primitive object along minimum-jerk wrist trajectories, grasp it, and
//! execute a scripted manipulation. Each sequence carries a simple and a
//! detailed text label; the detailed label names the acting hand, the
//! simple one never does.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{box_mesh, cylinder_mesh, icosphere, Rotation6D, TriangleMesh};
use crate::hand::{HandShape, Side, MIDDLE_TIP, THETA_DIM};
use crate::math::{min_jerk, vec3, Mat3, RigidTransform, Vec3};
use crate::repr::{
    canonicalize, compute_sd_features, HandTrack, ObjectTrack, SequenceSample,
};
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Action {
    Lift,
    Shake,
    Pass,
    Inspect,
    Drink,
    Offhand,
}

pub const ALL_ACTIONS: [Action; 6] = [
    Action::Lift,
    Action::Shake,
    Action::Pass,
    Action::Inspect,
    Action::Drink,
    Action::Offhand,
];

impl Action {
    pub fn label(&self) -> &'static str {
        match self {
            Action::Lift => "lift",
            Action::Shake => "shake",
            Action::Pass => "pass",
            Action::Inspect => "inspect",
            Action::Drink => "drink",
            Action::Offhand => "offhand",
        }
    }

    pub fn from_label(s: &str) -> Option<Action> {
        ALL_ACTIONS.iter().copied().find(|a| a.label() == s)
    }

    fn verb(&self) -> &'static str {
        match self {
            Action::Lift => "lifts",
            Action::Shake => "shakes",
            Action::Pass => "passes",
            Action::Inspect => "inspects",
            Action::Drink => "drinks from",
            Action::Offhand => "hands off",
        }
    }

    fn clause(&self) -> &'static str {
        match self {
            Action::Lift => "lifts it up",
            Action::Shake => "shakes it up and down",
            Action::Pass => "passes it to the other hand",
            Action::Inspect => "turns it over to inspect it",
            Action::Drink => "drinks from it",
            Action::Offhand => "sets it aside and lets go",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Handedness {
    Left,
    Right,
    Both,
}

pub const ALL_HANDEDNESS: [Handedness; 3] = [Handedness::Left, Handedness::Right, Handedness::Both];

impl Handedness {
    pub fn label(&self) -> &'static str {
        match self {
            Handedness::Left => "left",
            Handedness::Right => "right",
            Handedness::Both => "both",
        }
    }

    pub fn from_label(s: &str) -> Option<Handedness> {
        ALL_HANDEDNESS.iter().copied().find(|h| h.label() == s)
    }

    fn phrase(&self) -> &'static str {
        match self {
            Handedness::Left => "with the left hand",
            Handedness::Right => "with the right hand",
            Handedness::Both => "with both hands",
        }
    }

    /// Hands that approach the object during the grasping stage.
    pub fn active(&self) -> (bool, bool) {
        match self {
            Handedness::Left => (true, false),
            Handedness::Right => (false, true),
            Handedness::Both => (true, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PrimitiveKind {
    Sphere,
    Box,
    Cylinder,
}

pub const ALL_PRIMITIVES: [PrimitiveKind; 3] =
    [PrimitiveKind::Sphere, PrimitiveKind::Box, PrimitiveKind::Cylinder];

impl PrimitiveKind {
    pub fn noun(&self) -> &'static str {
        match self {
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Box => "box",
            PrimitiveKind::Cylinder => "cylinder",
        }
    }

    pub fn from_noun(s: &str) -> Option<PrimitiveKind> {
        ALL_PRIMITIVES.iter().copied().find(|p| p.noun() == s)
    }
}

/// Object geometry parameters in meters. `size` meaning depends on kind:
/// sphere `[radius, -, -]`, box half extents, cylinder `[radius, height, -]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObjectSpec {
    pub kind: PrimitiveKind,
    pub size: [f64; 3],
}

impl ObjectSpec {
    pub fn standard(kind: PrimitiveKind) -> ObjectSpec {
        let size = match kind {
            PrimitiveKind::Sphere => [0.040, 0.0, 0.0],
            PrimitiveKind::Box => [0.030, 0.040, 0.035],
            PrimitiveKind::Cylinder => [0.028, 0.100, 0.0],
        };
        ObjectSpec { kind, size }
    }

    pub fn mesh(&self) -> TriangleMesh {
        match self.kind {
            PrimitiveKind::Sphere => icosphere(self.size[0], 2),
            PrimitiveKind::Box => box_mesh(Vec3::ZERO, vec3(self.size[0], self.size[1], self.size[2])),
            PrimitiveKind::Cylinder => cylinder_mesh(self.size[0], self.size[1], 24),
        }
    }

    /// Distance from the center to the (analytic) surface along `dir`.
    pub fn support_radius(&self, dir: Vec3) -> f64 {
        let d = dir.normalized().unwrap_or(vec3(1.0, 0.0, 0.0));
        match self.kind {
            PrimitiveKind::Sphere => self.size[0],
            PrimitiveKind::Box => {
                let mut t = f64::INFINITY;
                for (h, c) in [
                    (self.size[0], d.x),
                    (self.size[1], d.y),
                    (self.size[2], d.z),
                ] {
                    if c.abs() > 1e-12 {
                        t = t.min(h / c.abs());
                    }
                }
                t
            }
            PrimitiveKind::Cylinder => {
                let mut t = f64::INFINITY;
                let rxy = libm::sqrt(d.x * d.x + d.y * d.y);
                if rxy > 1e-12 {
                    t = t.min(self.size[0] / rxy);
                }
                if d.z.abs() > 1e-12 {
                    t = t.min(self.size[1] / 2.0 / d.z.abs());
                }
                t
            }
        }
    }

    /// Height of the resting center above the table plane.
    fn rest_height(&self) -> f64 {
        match self.kind {
            PrimitiveKind::Sphere => self.size[0],
            PrimitiveKind::Box => self.size[2],
            PrimitiveKind::Cylinder => self.size[1] / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActionScript {
    pub action: Action,
    pub handedness: Handedness,
    pub object: ObjectSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TextPair {
    pub simple: String,
    pub detailed: String,
}

pub fn text_pair(action: Action, handedness: Handedness, object: PrimitiveKind) -> TextPair {
    TextPair {
        simple: format!("The person {} the {}.", action.verb(), object.noun()),
        detailed: format!(
            "The person picks up the {} {}, then {}, and places it back.",
            object.noun(),
            handedness.phrase(),
            action.clause()
        ),
    }
}

/// Generic grasping-stage sentence for an object name.
pub fn grasp_prompt(object_noun: &str) -> String {
    format!("The person grasps the {object_noun}.")
}

/// One generated sequence with its labels.
#[derive(Debug, Clone)]
pub struct GeneratedSequence {
    pub sample: SequenceSample,
    pub text: TextPair,
    pub script: ActionScript,
    /// Scripted approach length: the object is attached (and may move)
    /// only from this frame on.
    pub approach_frames: usize,
}

const REACH: f64 = 0.45;
const FINGERTIP_STANDOFF: f64 = 0.004;

struct PoseKey {
    frame: usize,
    pos: Vec3,
    rot: Mat3,
    curl: f64,
}

fn rotation_between(r0: &Mat3, r1: &Mat3) -> (Vec3, f64) {
    let rel = r0.transpose().matmul(r1);
    let tr = rel.m[0][0] + rel.m[1][1] + rel.m[2][2];
    let c = ((tr - 1.0) * 0.5).clamp(-1.0, 1.0);
    let ang = libm::acos(c);
    if ang < 1e-12 {
        return (vec3(0.0, 0.0, 1.0), 0.0);
    }
    if core::f64::consts::PI - ang < 1e-6 {
        // near 180 degrees: recover the axis from the diagonal
        let xx = libm::sqrt(((rel.m[0][0] + 1.0) * 0.5).max(0.0));
        let yy = libm::sqrt(((rel.m[1][1] + 1.0) * 0.5).max(0.0));
        let zz = libm::sqrt(((rel.m[2][2] + 1.0) * 0.5).max(0.0));
        let axis = vec3(xx, yy, zz).normalized().unwrap_or(vec3(0.0, 0.0, 1.0));
        return (axis, ang);
    }
    let axis = vec3(
        rel.m[2][1] - rel.m[1][2],
        rel.m[0][2] - rel.m[2][0],
        rel.m[1][0] - rel.m[0][1],
    ) / (2.0 * libm::sin(ang));
    (axis, ang)
}

fn rotation_interp(r0: &Mat3, r1: &Mat3, u: f64) -> Mat3 {
    let (axis, ang) = rotation_between(r0, r1);
    r0.matmul(&Mat3::from_axis_angle(axis, u * ang))
}

/// Evaluate a keyframe track with minimum-jerk easing per segment.
/// Segments with identical endpoints return the key values bit-exactly.
fn eval_keys(keys: &[PoseKey], frame: usize) -> (Vec3, Mat3, f64) {
    debug_assert!(!keys.is_empty());
    if frame <= keys[0].frame {
        return (keys[0].pos, keys[0].rot, keys[0].curl);
    }
    for w in keys.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if frame <= b.frame {
            if frame == b.frame {
                return (b.pos, b.rot, b.curl);
            }
            if a.pos == b.pos && a.rot == b.rot && a.curl == b.curl {
                return (a.pos, a.rot, a.curl);
            }
            let span = (b.frame - a.frame).max(1) as f64;
            let u = (frame - a.frame) as f64 / span;
            let s = min_jerk(u);
            let pos = a.pos * (1.0 - s) + b.pos * s;
            let rot = rotation_interp(&a.rot, &b.rot, s);
            let curl = a.curl * (1.0 - s) + b.curl * s;
            return (pos, rot, curl);
        }
    }
    let last = keys.last().unwrap();
    (last.pos, last.rot, last.curl)
}

/// Orientation whose local +y (finger direction) points along `dir`.
fn orient_fingers_along(dir: Vec3) -> Mat3 {
    let y = dir.normalized().unwrap_or(vec3(0.0, 1.0, 0.0));
    let up = if y.z.abs() > 0.9 {
        vec3(1.0, 0.0, 0.0)
    } else {
        vec3(0.0, 0.0, 1.0)
    };
    let z = (up - y * y.dot(up)).normalized().unwrap();
    let x = y.cross(z);
    Mat3::from_cols(x, y, z)
}

struct HandPlan {
    keys: Vec<PoseKey>,
    theta_g: [f64; THETA_DIM],
    /// Additive wrist oscillation (shake): (start, end, amplitude, hz)
    shake: Option<(usize, usize, f64, f64)>,
}

impl HandPlan {
    fn static_at(pos: Vec3, rot: Mat3, n: usize) -> HandPlan {
        HandPlan {
            keys: vec![
                PoseKey {
                    frame: 0,
                    pos,
                    rot,
                    curl: 0.0,
                },
                PoseKey {
                    frame: n - 1,
                    pos,
                    rot,
                    curl: 0.0,
                },
            ],
            theta_g: [0.0; THETA_DIM],
            shake: None,
        }
    }

    fn pose_at(&self, frame: usize, fps: f64) -> (Vec3, Mat3, f64) {
        let (mut pos, rot, curl) = eval_keys(&self.keys, frame);
        if let Some((start, end, amp, hz)) = self.shake {
            if frame >= start && frame <= end {
                let u = (frame - start) as f64 / (end - start).max(1) as f64;
                let ramp = min_jerk((u / 0.15).min(1.0)) * min_jerk(((1.0 - u) / 0.15).min(1.0));
                let t_sec = (frame - start) as f64 / fps;
                pos.z += amp * libm::sin(core::f64::consts::TAU * hz * t_sec) * ramp;
            }
        }
        (pos, rot, curl)
    }
}

/// Wrist pose whose middle fingertip touches the object surface along the
/// approach direction (with a small standoff).
fn grasp_wrist_pose(
    shape: &HandShape,
    theta_g: &[f64; THETA_DIM],
    object_center: Vec3,
    from_dir: Vec3,
    spec: &ObjectSpec,
) -> (Vec3, Mat3) {
    let u = from_dir.normalized().unwrap();
    let rot = orient_fingers_along(-u);
    let tip_local = shape.rest_joints[MIDDLE_TIP] + shape.displacements(theta_g)[MIDDLE_TIP];
    let surface = object_center + u * (spec.support_radius(u) + FINGERTIP_STANDOFF);
    let tau = surface - rot.apply(tip_local);
    (tau, rot)
}

/// Generate one sequence. Hands start 30-40 cm from the object, approach
/// with minimum-jerk wrist trajectories, and the manipulation phase rigidly
/// attaches the object to the gripping hand. Output is canonicalized and
/// carries geometry-consistent x_sd features.
pub fn generate_sequence(
    script: &ActionScript,
    left_shape: &HandShape,
    right_shape: &HandShape,
    n_frames: usize,
    fps: f64,
) -> Result<GeneratedSequence> {
    assert!(n_frames >= 20, "sequences need room for both stages");
    let mesh = script.object.mesh();
    let spec = script.object;
    let mut r = rng::chacha(
        script.seed,
        &[
            0x73796e,
            script.action as u64,
            script.handedness as u64,
            spec.kind as u64,
        ],
    );
    let mut uni = |lo: f64, hi: f64| lo + (hi - lo) * rng::uniform_f64(&mut r);

    // object resting pose
    let obj_pos = vec3(uni(-0.08, 0.08), uni(-0.08, 0.08), spec.rest_height());

    // feasibility: the hand must be able to reach around the object
    let max_support = spec.support_radius(vec3(1.0, 0.0, 0.0)).max(
        spec.support_radius(vec3(0.0, 0.0, 1.0)),
    );
    if max_support + 0.1 > REACH {
        return Err(Error::InfeasibleScript(format!(
            "object support radius {max_support:.3} m exceeds hand reach"
        )));
    }

    // seeded rest poses, right hand on +x side, left on -x side
    let mut rest_pose = |side: Side| {
        let base = match side {
            Side::Right => uni(-0.6, 0.6),
            Side::Left => core::f64::consts::PI + uni(-0.6, 0.6),
        };
        let dist = uni(0.30, 0.40);
        let height = uni(0.06, 0.14);
        let pos = obj_pos + vec3(dist * libm::cos(base), dist * libm::sin(base), height);
        let toward = vec3(obj_pos.x - pos.x, obj_pos.y - pos.y, 0.0);
        (pos, orient_fingers_along(toward))
    };
    let (rest_l, rest_rot_l) = rest_pose(Side::Left);
    let (rest_r, rest_rot_r) = rest_pose(Side::Right);

    let mut theta_for = |_: Side| {
        let mut t = [0.0; THETA_DIM];
        for v in t.iter_mut() {
            *v = uni(-1.2, 1.2);
        }
        t
    };
    let theta_l = theta_for(Side::Left);
    let theta_r = theta_for(Side::Right);

    let approach = libm::round(uni(40.0, 80.0)) as usize;
    let approach = approach.min(n_frames - 10);
    let n = n_frames;
    let m = n - 1 - approach; // manipulation frames after the grasp key

    let (active_l, active_r) = script.handedness.active();
    let grasp_l = grasp_wrist_pose(left_shape, &theta_l, obj_pos, rest_l - obj_pos, &spec);
    let grasp_r = grasp_wrist_pose(right_shape, &theta_r, obj_pos, rest_r - obj_pos, &spec);

    // gripping hand: the one carrying the object during manipulation
    let grip = match script.handedness {
        Handedness::Left => Side::Left,
        Handedness::Right => Side::Right,
        Handedness::Both => Side::Right,
    };

    let mut plan_l = HandPlan::static_at(rest_l, rest_rot_l, n);
    let mut plan_r = HandPlan::static_at(rest_r, rest_rot_r, n);
    plan_l.theta_g = theta_l;
    plan_r.theta_g = theta_r;
    // owner of the rigid attachment per frame (None = object static)
    let mut owner: Vec<Option<Side>> = vec![None; n];

    let key = |frame: usize, pos: Vec3, rot: Mat3, curl: f64| PoseKey {
        frame,
        pos,
        rot,
        curl,
    };
    let at = |frac: f64| approach + (libm::round(m as f64 * frac) as usize).min(m);

    // approach keys for the active hand(s)
    let approach_keys = |plan: &mut HandPlan, rest: Vec3, rest_rot: Mat3, grasp: (Vec3, Mat3)| {
        plan.keys = vec![
            key(0, rest, rest_rot, 0.0),
            key(approach, grasp.0, grasp.1, 1.0),
            key(n - 1, grasp.0, grasp.1, 1.0),
        ];
    };
    if active_l {
        approach_keys(&mut plan_l, rest_l, rest_rot_l, grasp_l);
    }
    if active_r {
        approach_keys(&mut plan_r, rest_r, rest_rot_r, grasp_r);
    }

    // Manipulation scripting always edits the gripping hand's keys from the
    // grasp key onward; the final key at n-1 is replaced per action.
    let (grip_grasp, grip_rest, _grip_rest_rot) = match grip {
        Side::Left => (grasp_l, rest_l, rest_rot_l),
        Side::Right => (grasp_r, rest_r, rest_rot_r),
    };
    for f in owner.iter_mut().skip(approach) {
        *f = Some(grip);
    }

    match script.action {
        Action::Lift => {
            let plan = if grip == Side::Left { &mut plan_l } else { &mut plan_r };
            plan.keys.pop();
            plan.keys.push(key(
                n - 1,
                grip_grasp.0 + vec3(0.0, 0.0, 0.15),
                grip_grasp.1,
                1.0,
            ));
            if script.handedness == Handedness::Both {
                // supporting hand follows the same vertical motion
                let other = &mut plan_l;
                other.keys.pop();
                other
                    .keys
                    .push(key(n - 1, grasp_l.0 + vec3(0.0, 0.0, 0.15), grasp_l.1, 1.0));
            }
        }
        Action::Shake => {
            let plan = if grip == Side::Left { &mut plan_l } else { &mut plan_r };
            plan.shake = Some((approach, n - 1, 0.03, 3.0));
        }
        Action::Inspect => {
            let plan = if grip == Side::Left { &mut plan_l } else { &mut plan_r };
            let center = obj_pos;
            let spin = |pos: Vec3, rot: Mat3, axis: Vec3, ang: f64| {
                let rm = Mat3::from_axis_angle(axis, ang);
                (center + rm.apply(pos - center), rm.matmul(&rot))
            };
            let (p1, r1) = spin(grip_grasp.0, grip_grasp.1, vec3(0.0, 0.0, 1.0), 0.785398163);
            let (p2, r2) = spin(p1, r1, vec3(1.0, 0.0, 0.0), 0.785398163);
            plan.keys.pop();
            plan.keys.push(key(at(0.5), p1, r1, 1.0));
            plan.keys.push(key(n - 1, p2, r2, 1.0));
        }
        Action::Drink => {
            let plan = if grip == Side::Left { &mut plan_l } else { &mut plan_r };
            let head = vec3(0.0, -0.30, 0.35);
            let tilt = Mat3::from_axis_angle(vec3(1.0, 0.0, 0.0), -0.6).matmul(&grip_grasp.1);
            plan.keys.pop();
            plan.keys.push(key(at(0.40), head, grip_grasp.1, 1.0));
            plan.keys.push(key(at(0.65), head + vec3(0.0, 0.0, 0.02), tilt, 1.0));
            plan.keys.push(key(n - 1, grip_grasp.0 + vec3(0.0, 0.0, 0.05), grip_grasp.1, 1.0));
        }
        Action::Offhand => {
            let plan = if grip == Side::Left { &mut plan_l } else { &mut plan_r };
            let place = grip_grasp.0 + vec3(0.0, -0.14, 0.0);
            let release = at(0.55);
            plan.keys.pop();
            plan.keys.push(key(at(0.50), place, grip_grasp.1, 1.0));
            plan.keys.push(key(release, place, grip_grasp.1, 1.0));
            let retreat = grip_rest * 0.6 + place * 0.4;
            plan.keys.push(key(n - 1, retreat, grip_grasp.1, 0.0));
            for f in owner.iter_mut().skip(release + 1) {
                *f = None;
            }
        }
        Action::Pass => {
            // the gripping hand carries the object to a meet point where
            // the other hand takes over
            let meet = obj_pos + vec3(0.0, 0.0, 0.18);
            let receiver = match grip {
                Side::Left => Side::Right,
                Side::Right => Side::Left,
            };
            let switch = at(0.55);
            {
                let (plan, grasp, rest) = match grip {
                    Side::Left => (&mut plan_l, grasp_l, rest_l),
                    Side::Right => (&mut plan_r, grasp_r, rest_r),
                };
                let carry = meet + (grasp.0 - obj_pos);
                plan.keys.pop();
                plan.keys.push(key(at(0.35), carry, grasp.1, 1.0));
                plan.keys.push(key(switch, carry, grasp.1, 1.0));
                plan.keys.push(key(n - 1, rest * 0.6 + carry * 0.4, grasp.1, 0.0));
            }
            {
                // receiver grasps the object at the meet point from its side
                let (plan, rest, rest_rot, shape, theta) = match receiver {
                    Side::Left => (&mut plan_l, rest_l, rest_rot_l, left_shape, &theta_l),
                    Side::Right => (&mut plan_r, rest_r, rest_rot_r, right_shape, &theta_r),
                };
                let meet_grasp = grasp_wrist_pose(shape, theta, meet, rest - meet, &spec);
                let start_move = if script.handedness == Handedness::Both {
                    // both-handed pass: the receiver also approaches early
                    approach
                } else {
                    at(0.25)
                };
                let hold = meet_grasp.0;
                plan.keys = vec![
                    key(0, rest, rest_rot, 0.0),
                    key(start_move.max(1), rest, rest_rot, 0.0),
                    key(switch, hold, meet_grasp.1, 1.0),
                    key(n - 1, hold + vec3(0.0, 0.0, -0.04), meet_grasp.1, 1.0),
                ];
            }
            for (f, o) in owner.iter_mut().enumerate().skip(switch + 1) {
                let _ = f;
                *o = Some(receiver);
            }
        }
    }

    // both-handed non-pass actions: the supporting hand mirrors the grip
    // hand's rigid motion so the joint grasp stays consistent
    if script.handedness == Handedness::Both && script.action != Action::Pass {
        let support = match grip {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        // rebuild the support plan from the grip plan's relative motion
        let (grip_plan, support_plan, support_grasp, support_rest, support_rest_rot) = match support
        {
            Side::Left => (&plan_r, &mut plan_l, grasp_l, rest_l, rest_rot_l),
            Side::Right => (&plan_l, &mut plan_r, grasp_r, rest_r, rest_rot_r),
        };
        if script.action != Action::Lift {
            let grip_grasp_pose = grip_grasp;
            let mut keys = vec![
                key(0, support_rest, support_rest_rot, 0.0),
                key(approach, support_grasp.0, support_grasp.1, 1.0),
            ];
            for k in grip_plan.keys.iter().skip(2) {
                // transform the support hand rigidly with the grip hand
                let rel_rot = k.rot.matmul(&grip_grasp_pose.1.transpose());
                let pos = rel_rot.apply(support_grasp.0 - grip_grasp_pose.0) + k.pos;
                let rot = rel_rot.matmul(&support_grasp.1);
                keys.push(key(k.frame, pos, rot, 1.0));
            }
            support_plan.keys = keys;
            support_plan.shake = grip_plan.shake;
        }
    }

    // assemble tracks
    let mut left = HandTrack {
        tau: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        x_sd: vec![[Vec3::ZERO; crate::hand::NUM_JOINTS]; n],
    };
    let mut right = left.clone();
    for f in 0..n {
        for (plan, track, theta_g) in [
            (&plan_l, &mut left, &theta_l),
            (&plan_r, &mut right, &theta_r),
        ] {
            let (pos, rot, curl) = plan.pose_at(f, fps);
            track.tau.push(pos);
            track.phi.push(Rotation6D::from_matrix(&rot));
            let mut th = [0.0; THETA_DIM];
            for (o, v) in th.iter_mut().zip(theta_g.iter()) {
                *o = curl * v;
            }
            track.theta.push(th);
        }
    }

    // object track follows the rigid attachment schedule
    let mut obj = ObjectTrack {
        tau: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
    };
    let mut current = RigidTransform::translation_only(obj_pos);
    let mut rel: Option<(Side, RigidTransform)> = None;
    for f in 0..n {
        match owner[f] {
            None => {
                rel = None;
            }
            Some(side) => {
                let track = match side {
                    Side::Left => &left,
                    Side::Right => &right,
                };
                let hand = RigidTransform {
                    rotation: track.phi[f].to_matrix()?,
                    translation: track.tau[f],
                };
                match rel {
                    Some((s, t_rel)) if s == side => {
                        current = hand.compose(&t_rel);
                    }
                    _ => {
                        // (re-)attach: keep the current object pose
                        let t_rel = hand.inverse().compose(&current);
                        rel = Some((side, t_rel));
                    }
                }
            }
        }
        obj.tau.push(current.translation);
        obj.phi.push(Rotation6D::from_matrix(&current.rotation));
    }

    let mut sample = SequenceSample {
        left,
        right,
        object: obj,
        n_frames: n,
        frame_rate: fps,
        canonical_transform: RigidTransform::IDENTITY,
    };
    compute_sd_features(&mut sample, &mesh, left_shape, right_shape)?;
    let sample = canonicalize(&sample);
    sample.validate()?;

    Ok(GeneratedSequence {
        sample,
        text: text_pair(script.action, script.handedness, spec.kind),
        script: *script,
        approach_frames: approach,
    })
}

/// First frame at which the object has moved (translation above
/// `trans_eps` meters or rotation above `rot_eps` radians relative to
/// frame 0). Returns `(n_frames, true)` when the object never moves.
pub fn split_grasp_interaction(
    sample: &SequenceSample,
    trans_eps: f64,
    rot_eps: f64,
) -> Result<(usize, bool)> {
    let n = sample.n_frames;
    if n < 2 {
        return Err(Error::ShapeMismatch {
            field: "n_frames",
            expected: 2,
            got: n,
        });
    }
    let r0 = sample.object.phi[0].to_matrix()?;
    for i in 1..n {
        let dt = sample.object.tau[i].distance(sample.object.tau[0]);
        let dr = r0.angle_to(&sample.object.phi[i].to_matrix()?);
        if dt > trans_eps || dr > rot_eps {
            return Ok((i, false));
        }
    }
    Ok((n, true))
}

/// Resample a sequence to `target` frames: linear interpolation for
/// positions, pose coefficients, and x_sd; componentwise 6D blending with
/// re-orthonormalization for rotations. Endpoints are preserved exactly.
pub fn resample_length(sample: &SequenceSample, target: usize) -> Result<SequenceSample> {
    let n = sample.n_frames;
    if n < 2 || target < 2 {
        return Err(Error::ResampleLength { input: n, target });
    }
    let pick = |j: usize| -> (usize, usize, f64) {
        let src = (j * (n - 1)) as f64 / (target - 1) as f64;
        let i0 = libm::floor(src) as usize;
        let i0 = i0.min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, src - i0 as f64)
    };
    let lerp3 = |a: Vec3, b: Vec3, u: f64| a * (1.0 - u) + b * u;

    let resample_hand = |h: &HandTrack| -> Result<HandTrack> {
        let mut out = HandTrack {
            tau: Vec::with_capacity(target),
            phi: Vec::with_capacity(target),
            theta: Vec::with_capacity(target),
            x_sd: Vec::with_capacity(target),
        };
        for j in 0..target {
            let (i0, i1, u) = pick(j);
            if u == 0.0 {
                out.tau.push(h.tau[i0]);
                out.phi.push(h.phi[i0]);
                out.theta.push(h.theta[i0]);
                out.x_sd.push(h.x_sd[i0]);
                continue;
            }
            out.tau.push(lerp3(h.tau[i0], h.tau[i1], u));
            out.phi.push(h.phi[i0].lerp_orthonormalized(&h.phi[i1], u)?);
            let mut th = [0.0; THETA_DIM];
            for d in 0..THETA_DIM {
                th[d] = h.theta[i0][d] * (1.0 - u) + h.theta[i1][d] * u;
            }
            out.theta.push(th);
            let mut xs = [Vec3::ZERO; crate::hand::NUM_JOINTS];
            for d in 0..crate::hand::NUM_JOINTS {
                xs[d] = lerp3(h.x_sd[i0][d], h.x_sd[i1][d], u);
            }
            out.x_sd.push(xs);
        }
        Ok(out)
    };

    let mut object = ObjectTrack {
        tau: Vec::with_capacity(target),
        phi: Vec::with_capacity(target),
    };
    for j in 0..target {
        let (i0, i1, u) = pick(j);
        if u == 0.0 {
            object.tau.push(sample.object.tau[i0]);
            object.phi.push(sample.object.phi[i0]);
        } else {
            object
                .tau
                .push(lerp3(sample.object.tau[i0], sample.object.tau[i1], u));
            object
                .phi
                .push(sample.object.phi[i0].lerp_orthonormalized(&sample.object.phi[i1], u)?);
        }
    }

    Ok(SequenceSample {
        left: resample_hand(&sample.left)?,
        right: resample_hand(&sample.right)?,
        object,
        n_frames: target,
        frame_rate: sample.frame_rate,
        canonical_transform: sample.canonical_transform,
    })
}

/// Stage-align a sequence: detect the grasp boundary, resample the grasp
/// clip to `n_grasp` frames and the remainder so the total length is
/// `n_total`, sharing the seam frame. Returns the aligned full sequence,
/// the aligned grasp clip, and the raw boundary.
pub fn stage_align(
    sample: &SequenceSample,
    n_grasp: usize,
    n_total: usize,
    trans_eps: f64,
    rot_eps: f64,
) -> Result<(SequenceSample, SequenceSample, usize)> {
    let (boundary, flagged) = split_grasp_interaction(sample, trans_eps, rot_eps)?;
    if flagged || boundary < 2 || boundary + 1 >= sample.n_frames {
        return Err(Error::InfeasibleScript(String::from(
            "no usable grasp/interaction boundary",
        )));
    }
    let grasp_clip = resample_length(&sample.crop(0, boundary), n_grasp)?;
    let rest = resample_length(
        &sample.crop(boundary - 1, sample.n_frames),
        n_total - n_grasp + 1,
    )?;
    // concatenate, dropping the duplicated seam frame
    let mut full = grasp_clip.clone();
    let push_hand = |dst: &mut HandTrack, src: &HandTrack| {
        dst.tau.extend_from_slice(&src.tau[1..]);
        dst.phi.extend_from_slice(&src.phi[1..]);
        dst.theta.extend_from_slice(&src.theta[1..]);
        dst.x_sd.extend_from_slice(&src.x_sd[1..]);
    };
    push_hand(&mut full.left, &rest.left);
    push_hand(&mut full.right, &rest.right);
    full.object.tau.extend_from_slice(&rest.object.tau[1..]);
    full.object.phi.extend_from_slice(&rest.object.phi[1..]);
    full.n_frames = n_total;
    full.validate()?;
    Ok((full, grasp_clip, boundary))
}
