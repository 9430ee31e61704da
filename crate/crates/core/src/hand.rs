//! Synthetic parametric hand: 21 joints (wrist + four joints per finger),
//! a seeded linear pose basis standing in for a PCA pose space, and a
//! capsule-style surface proxy used by the physics metrics.

use alloc::vec::Vec;

use crate::error::Result;
use crate::geometry::Rotation6D;
use crate::math::{vec3, RigidTransform, Vec3};
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub const NUM_JOINTS: usize = 21;
pub const NUM_BONES: usize = 20;
pub const THETA_DIM: usize = 24;

/// Kinematic tree as (parent, child) joint pairs. Joint order: wrist, then
/// thumb, index, middle, ring, pinky with four joints each ending at the tip.
pub const BONES: [(usize, usize); NUM_BONES] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4), // thumb
    (0, 5),
    (5, 6),
    (6, 7),
    (7, 8), // index
    (0, 9),
    (9, 10),
    (10, 11),
    (11, 12), // middle
    (0, 13),
    (13, 14),
    (14, 15),
    (15, 16), // ring
    (0, 17),
    (17, 18),
    (18, 19),
    (19, 20), // pinky
];

pub const FINGERTIPS: [usize; 5] = [4, 8, 12, 16, 20];
pub const MIDDLE_TIP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    Left,
    Right,
}

/// Total joint displacement (meters) produced by a unit pose coefficient.
pub const POSE_COLUMN_SCALE: f64 = 0.015;

/// Rest geometry plus the linear map from pose coefficients to joint
/// displacements. Left and right shapes are exact mirror images across the
/// `x = 0` plane.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HandShape {
    /// 21 joints in the hand-local frame, wrist at the origin, meters.
    pub rest_joints: Vec<Vec3>,
    /// 63x24 row-major; column j is the joint-displacement direction for
    /// theta[j]. Columns are mutually orthogonal with Frobenius norm
    /// `POSE_COLUMN_SCALE`, so a unit coefficient moves the joints by at
    /// most 1.5 cm in total.
    pub pose_basis: Vec<f64>,
    pub side: Side,
    /// Per-joint proxy sphere radius in meters.
    pub proxy_radius: Vec<f64>,
}

/// Pose of one hand: global translation, 6D orientation, and 24 pose
/// coefficients (clamped to [-5, 5]).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HandPose {
    pub tau: Vec3,
    pub phi: Rotation6D,
    pub theta: [f64; THETA_DIM],
}

impl HandPose {
    pub const REST: HandPose = HandPose {
        tau: Vec3::ZERO,
        phi: Rotation6D::IDENTITY,
        theta: [0.0; THETA_DIM],
    };

    /// Mirror across the x = 0 plane; the paired shape of the other side
    /// reproduces the mirrored joints exactly.
    pub fn mirrored(&self) -> HandPose {
        // R' = M R M with M = diag(-1,1,1); columns are -M c0 and M c1.
        let c0 = self.phi.col0();
        let c1 = self.phi.col1();
        HandPose {
            tau: vec3(-self.tau.x, self.tau.y, self.tau.z),
            phi: Rotation6D([c0.x, -c0.y, -c0.z, -c1.x, c1.y, c1.z]),
            theta: self.theta,
        }
    }
}

impl HandShape {
    /// Deterministic synthetic hand: published-style bone-length ratios
    /// scaled to an 18 cm hand, seeded random orthogonal pose basis. The
    /// left shape mirrors the right one generated from the same seed.
    pub fn synthetic(side: Side, seed: u64) -> HandShape {
        let rest_right = rest_skeleton();
        let basis_right = random_orthogonal_basis(seed);
        let radii = proxy_radii();
        match side {
            Side::Right => HandShape {
                rest_joints: rest_right,
                pose_basis: basis_right,
                side,
                proxy_radius: radii,
            },
            Side::Left => {
                let rest = rest_right.into_iter().map(|v| vec3(-v.x, v.y, v.z)).collect();
                let mut basis = basis_right;
                // mirroring negates the x row of every joint block
                for j in 0..NUM_JOINTS {
                    for k in 0..THETA_DIM {
                        basis[(3 * j) * THETA_DIM + k] = -basis[(3 * j) * THETA_DIM + k];
                    }
                }
                HandShape {
                    rest_joints: rest,
                    pose_basis: basis,
                    side,
                    proxy_radius: radii,
                }
            }
        }
    }

    /// Joint displacement `reshape(pose_basis * theta)` in the local frame.
    pub fn displacements(&self, theta: &[f64; THETA_DIM]) -> Vec<Vec3> {
        let mut clamped = [0.0; THETA_DIM];
        for (c, t) in clamped.iter_mut().zip(theta.iter()) {
            *c = t.clamp(-5.0, 5.0);
        }
        let mut out = Vec::with_capacity(NUM_JOINTS);
        for j in 0..NUM_JOINTS {
            let row = |r: usize| {
                let base = (3 * j + r) * THETA_DIM;
                let mut s = 0.0;
                for k in 0..THETA_DIM {
                    s += self.pose_basis[base + k] * clamped[k];
                }
                s
            };
            out.push(vec3(row(0), row(1), row(2)));
        }
        out
    }
}

/// Forward kinematics: `J = R(phi) * (rest + reshape(B * theta)) + tau`.
pub fn joints(shape: &HandShape, pose: &HandPose) -> Result<Vec<Vec3>> {
    let r = pose.phi.to_matrix()?;
    let disp = shape.displacements(&pose.theta);
    Ok(shape
        .rest_joints
        .iter()
        .zip(disp.iter())
        .map(|(rest, d)| r.apply(*rest + *d) + pose.tau)
        .collect())
}

/// Sample points along the posed kinematic tree: the 21 joints plus
/// `density` interior points per bone, each with an interpolated proxy
/// radius. Count is `21 + 20 * density`.
pub fn surface_points(
    shape: &HandShape,
    pose: &HandPose,
    density: usize,
) -> Result<Vec<(Vec3, f64)>> {
    let j = joints(shape, pose)?;
    let mut out = Vec::with_capacity(NUM_JOINTS + NUM_BONES * density);
    for i in 0..NUM_JOINTS {
        out.push((j[i], shape.proxy_radius[i]));
    }
    for &(a, b) in &BONES {
        for k in 1..=density {
            let t = k as f64 / (density as f64 + 1.0);
            let p = j[a] * (1.0 - t) + j[b] * t;
            let r = shape.proxy_radius[a] * (1.0 - t) + shape.proxy_radius[b] * t;
            out.push((p, r));
        }
    }
    Ok(out)
}

/// World pose of the hand frame as a rigid transform.
pub fn hand_transform(pose: &HandPose) -> Result<RigidTransform> {
    Ok(RigidTransform {
        rotation: pose.phi.to_matrix()?,
        translation: pose.tau,
    })
}

fn rest_skeleton() -> Vec<Vec3> {
    // Right hand, fingers along +y, thumb toward +x, palm normal +z.
    // Bone lengths follow common hand proportion tables scaled to 18 cm.
    let mut j = Vec::with_capacity(NUM_JOINTS);
    j.push(Vec3::ZERO); // 0 wrist

    let dir = |x: f64, y: f64, z: f64| vec3(x, y, z).normalized().unwrap();

    // thumb: cmc, mcp, ip, tip
    let t_dir = dir(0.75, 0.62, 0.15);
    let t0 = vec3(0.030, 0.025, 0.005);
    j.push(t0);
    j.push(t0 + t_dir * 0.042);
    j.push(t0 + t_dir * (0.042 + 0.032));
    j.push(t0 + t_dir * (0.042 + 0.032 + 0.026));

    // (mcp position, direction, proximal, middle, distal)
    let fingers = [
        (vec3(0.027, 0.085, 0.0), dir(0.12, 0.99, 0.0), 0.038, 0.023, 0.019), // index
        (vec3(0.003, 0.089, 0.0), dir(0.0, 1.0, 0.0), 0.041, 0.026, 0.019),   // middle
        (vec3(-0.021, 0.084, 0.0), dir(-0.11, 0.99, 0.0), 0.037, 0.024, 0.019), // ring
        (vec3(-0.042, 0.074, 0.0), dir(-0.22, 0.97, 0.0), 0.029, 0.018, 0.016), // pinky
    ];
    for (mcp, d, l1, l2, l3) in fingers {
        j.push(mcp);
        j.push(mcp + d * l1);
        j.push(mcp + d * (l1 + l2));
        j.push(mcp + d * (l1 + l2 + l3));
    }
    j
}

fn proxy_radii() -> Vec<f64> {
    let mut r = Vec::with_capacity(NUM_JOINTS);
    r.push(0.010); // wrist
    for _finger in 0..5 {
        r.push(0.010); // cmc / knuckle (palm scale)
        r.push(0.007); // mid phalanx
        r.push(0.007);
        r.push(0.005); // fingertip
    }
    r
}

/// Seeded 63x24 basis with mutually orthogonal columns of Frobenius norm
/// `POSE_COLUMN_SCALE`. The wrist rows stay zero so theta never moves the
/// wrist relative to tau.
fn random_orthogonal_basis(seed: u64) -> Vec<f64> {
    let rows = 3 * NUM_JOINTS;
    let mut rng = rng::chacha(seed, &[0x68616e64]);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(THETA_DIM);
    while cols.len() < THETA_DIM {
        let mut v: Vec<f64> = (0..rows).map(|_| rng::standard_normal(&mut rng)).collect();
        v[0] = 0.0;
        v[1] = 0.0;
        v[2] = 0.0;
        for c in &cols {
            let dot: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c.iter()) {
                *vi -= dot * ci;
            }
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
        if norm < 1e-6 {
            continue;
        }
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    let mut basis = alloc::vec![0.0; rows * THETA_DIM];
    for (k, c) in cols.iter().enumerate() {
        for (row, val) in c.iter().enumerate() {
            basis[row * THETA_DIM + k] = val * POSE_COLUMN_SCALE;
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Mat3;

    fn shapes() -> (HandShape, HandShape) {
        (
            HandShape::synthetic(Side::Left, 11),
            HandShape::synthetic(Side::Right, 11),
        )
    }

    #[test]
    fn rest_pose_returns_rest_joints() {
        let (_, right) = shapes();
        let j = joints(&right, &HandPose::REST).unwrap();
        for (a, b) in j.iter().zip(right.rest_joints.iter()) {
            assert!(a.distance(*b) < 1e-15);
        }
    }

    #[test]
    fn translation_equivariance() {
        let (_, right) = shapes();
        let mut pose = HandPose::REST;
        pose.theta[3] = 1.2;
        let j0 = joints(&right, &pose).unwrap();
        pose.tau += vec3(1.0, 2.0, 3.0);
        let j1 = joints(&right, &pose).unwrap();
        for (a, b) in j0.iter().zip(j1.iter()) {
            assert!((*b - *a).distance(vec3(1.0, 2.0, 3.0)) < 1e-12);
        }
    }

    #[test]
    fn basis_vector_matches_direct_matrix_multiply() {
        let (_, right) = shapes();
        let mut pose = HandPose::REST;
        pose.theta[0] = 1.0;
        let j = joints(&right, &pose).unwrap();
        // oracle: rest + column 0 of pose_basis reshaped to 21x3
        for jj in 0..NUM_JOINTS {
            let expected = right.rest_joints[jj]
                + vec3(
                    right.pose_basis[(3 * jj) * THETA_DIM],
                    right.pose_basis[(3 * jj + 1) * THETA_DIM],
                    right.pose_basis[(3 * jj + 2) * THETA_DIM],
                );
            assert!(j[jj].distance(expected) < 1e-15);
        }
    }

    #[test]
    fn basis_columns_have_fixed_norm_and_are_orthogonal() {
        let (_, right) = shapes();
        for a in 0..THETA_DIM {
            let mut na = 0.0;
            for row in 0..63 {
                let v = right.pose_basis[row * THETA_DIM + a];
                na += v * v;
            }
            assert!((libm::sqrt(na) - POSE_COLUMN_SCALE).abs() < 1e-12);
            for b in (a + 1)..THETA_DIM {
                let mut dot = 0.0;
                for row in 0..63 {
                    dot += right.pose_basis[row * THETA_DIM + a]
                        * right.pose_basis[row * THETA_DIM + b];
                }
                assert!(dot.abs() < 1e-12, "columns {a},{b} not orthogonal: {dot}");
            }
        }
    }

    #[test]
    fn mirror_symmetry_is_exact() {
        let (left, right) = shapes();
        let mut pose = HandPose::REST;
        pose.tau = vec3(0.2, 0.1, 0.3);
        pose.phi = Rotation6D::from_matrix(&Mat3::from_axis_angle(vec3(0.4, 1.0, -0.2), 0.8));
        pose.theta[5] = 2.0;
        pose.theta[17] = -1.0;
        let jr = joints(&right, &pose).unwrap();
        let jl = joints(&left, &pose.mirrored()).unwrap();
        for (l, r) in jl.iter().zip(jr.iter()) {
            assert_eq!(l.x, -r.x);
            assert_eq!(l.y, r.y);
            assert_eq!(l.z, r.z);
        }
    }

    #[test]
    fn joints_linear_in_theta() {
        let (_, right) = shapes();
        let mut t1 = [0.0; THETA_DIM];
        let mut t2 = [0.0; THETA_DIM];
        t1[2] = 0.7;
        t1[9] = -0.4;
        t2[2] = 0.3;
        t2[15] = 1.1;
        let at = |theta: [f64; THETA_DIM]| {
            let pose = HandPose {
                theta,
                ..HandPose::REST
            };
            joints(&right, &pose).unwrap()
        };
        let j0 = at([0.0; THETA_DIM]);
        let ja = at(t1);
        let jb = at(t2);
        let mut tsum = t1;
        for i in 0..THETA_DIM {
            tsum[i] += t2[i];
        }
        let jsum = at(tsum);
        for i in 0..NUM_JOINTS {
            let lhs = jsum[i] - j0[i];
            let rhs = (ja[i] - j0[i]) + (jb[i] - j0[i]);
            assert!(lhs.distance(rhs) < 1e-12);
        }
    }

    #[test]
    fn surface_point_count_and_bound() {
        let (_, right) = shapes();
        let pts = surface_points(&right, &HandPose::REST, 1).unwrap();
        assert_eq!(pts.len(), 41);
        let max_r = right.proxy_radius.iter().cloned().fold(0.0, f64::max);
        let max_bone = BONES
            .iter()
            .map(|&(a, b)| right.rest_joints[a].distance(right.rest_joints[b]))
            .fold(0.0, f64::max);
        let reach = right
            .rest_joints
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max);
        for (p, _) in &pts {
            assert!(p.norm() <= reach + max_r + max_bone);
        }
    }

    #[test]
    fn rigid_equivariance_of_surface_points() {
        let (_, right) = shapes();
        let mut pose = HandPose::REST;
        pose.theta[1] = 0.9;
        let base = surface_points(&right, &pose, 2).unwrap();
        let r = Mat3::from_axis_angle(vec3(0.1, 0.9, 0.3), 1.3);
        let t = vec3(0.4, -0.2, 0.7);
        let moved_pose = HandPose {
            tau: r.apply(pose.tau) + t,
            phi: Rotation6D::from_matrix(&r.matmul(&pose.phi.to_matrix().unwrap())),
            theta: pose.theta,
        };
        let moved = surface_points(&right, &moved_pose, 2).unwrap();
        for ((p0, r0), (p1, r1)) in base.iter().zip(moved.iter()) {
            assert!(p1.distance(r.apply(*p0) + t) < 1e-12);
            assert_eq!(r0, r1);
        }
    }
}
