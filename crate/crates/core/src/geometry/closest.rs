use crate::error::Result;
use crate::math::Vec3;

use super::mesh::TriangleMesh;
use super::BVH_CLOSEST_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub point: Vec3,
    pub distance: f64,
    pub face: usize,
}

/// Exact closest point on triangle `(a, b, c)` to `p` (Ericson's region
/// classification).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub(crate) fn face_closest(mesh: &TriangleMesh, face: usize, p: Vec3) -> (Vec3, f64) {
    let (a, b, c) = mesh.triangle(face);
    let q = closest_point_on_triangle(p, a, b, c);
    (q, (p - q).norm_sq())
}

/// Globally closest surface point. Brute force below
/// [`BVH_CLOSEST_THRESHOLD`] faces, BVH traversal above; ties on distance
/// resolve to the lowest face index so both paths return identical results.
pub fn closest_point(mesh: &TriangleMesh, p: Vec3) -> Result<ClosestHit> {
    let hit = if mesh.faces().len() < BVH_CLOSEST_THRESHOLD {
        brute_closest(mesh, p)
    } else {
        mesh.bvh().closest(mesh, p)
    };
    Ok(hit)
}

pub(crate) fn brute_closest(mesh: &TriangleMesh, p: Vec3) -> ClosestHit {
    let mut best = ClosestHit {
        point: Vec3::ZERO,
        distance: f64::INFINITY,
        face: usize::MAX,
    };
    let mut best_d2 = f64::INFINITY;
    for face in 0..mesh.faces().len() {
        let (q, d2) = face_closest(mesh, face, p);
        if d2 < best_d2 || (d2 == best_d2 && face < best.face) {
            best_d2 = d2;
            best = ClosestHit {
                point: q,
                distance: 0.0,
                face,
            };
        }
    }
    best.distance = libm::sqrt(best_d2);
    best
}
