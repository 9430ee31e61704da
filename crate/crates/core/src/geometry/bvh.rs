use alloc::vec::Vec;

use crate::math::Vec3;

use super::closest::{face_closest, ClosestHit};
use super::mesh::{Aabb, TriangleMesh};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        aabb: Aabb,
        start: usize,
        len: usize,
    },
    Inner {
        aabb: Aabb,
        left: usize,
        right: usize,
    },
}

/// Median-split AABB tree over triangle indices. Used for nearest-point
/// queries on large meshes and for ray-crossing counts on all meshes.
#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices, partitioned so each leaf owns a contiguous run.
    order: Vec<usize>,
    root: usize,
}

impl Bvh {
    pub fn build(vertices: &[Vec3], faces: &[[usize; 3]]) -> Bvh {
        let boxes: Vec<Aabb> = faces
            .iter()
            .map(|f| {
                let mut b = Aabb::empty();
                b.grow(vertices[f[0]]);
                b.grow(vertices[f[1]]);
                b.grow(vertices[f[2]]);
                b
            })
            .collect();
        let mut order: Vec<usize> = (0..faces.len()).collect();
        let mut nodes = Vec::new();
        let total = order.len();
        let root = build_node(&boxes, &mut order, 0, total, &mut nodes);
        Bvh { nodes, order, root }
    }

    pub fn closest(&self, mesh: &TriangleMesh, p: Vec3) -> ClosestHit {
        let mut best_d2 = f64::INFINITY;
        let mut best_face = usize::MAX;
        let mut best_point = Vec3::ZERO;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(self.root);
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { aabb, start, len } => {
                    if aabb.distance_sq(p) > best_d2 {
                        continue;
                    }
                    for &face in &self.order[*start..*start + *len] {
                        let (q, d2) = face_closest(mesh, face, p);
                        if d2 < best_d2 || (d2 == best_d2 && face < best_face) {
                            best_d2 = d2;
                            best_face = face;
                            best_point = q;
                        }
                    }
                }
                Node::Inner { aabb, left, right } => {
                    if aabb.distance_sq(p) > best_d2 {
                        continue;
                    }
                    // visit nearer child last so it pops first
                    let dl = self.node_aabb(*left).distance_sq(p);
                    let dr = self.node_aabb(*right).distance_sq(p);
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        ClosestHit {
            point: best_point,
            distance: libm::sqrt(best_d2),
            face: best_face,
        }
    }

    /// Count ray crossings from `origin` along `dir` (t > 0). Returns `None`
    /// when any intersection is a grazing hit (parallel ray, boundary
    /// barycentrics within 1e-12, or t ~ 0) so the caller can retry with a
    /// different direction.
    pub fn ray_crossings(&self, mesh: &TriangleMesh, origin: Vec3, dir: Vec3) -> Option<usize> {
        let inv = vec3_recip(dir);
        let mut count = 0usize;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(self.root);
        while let Some(ni) = stack.pop() {
            let aabb = self.node_aabb(ni);
            if !ray_hits_aabb(origin, inv, aabb) {
                continue;
            }
            match &self.nodes[ni] {
                Node::Leaf { start, len, .. } => {
                    for &face in &self.order[*start..*start + *len] {
                        let (a, b, c) = mesh.triangle(face);
                        match ray_triangle(origin, dir, a, b, c) {
                            RayHit::Miss => {}
                            RayHit::Hit => count += 1,
                            RayHit::Grazing => return None,
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        Some(count)
    }

    fn node_aabb(&self, i: usize) -> &Aabb {
        match &self.nodes[i] {
            Node::Leaf { aabb, .. } => aabb,
            Node::Inner { aabb, .. } => aabb,
        }
    }
}

fn build_node(
    boxes: &[Aabb],
    order: &mut [usize],
    start: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut aabb = Aabb::empty();
    for &f in &order[start..start + len] {
        aabb = aabb.union(&boxes[f]);
    }
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf { aabb, start, len });
        return nodes.len() - 1;
    }
    let ext = aabb.max - aabb.min;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let key = |f: usize| {
        let c = boxes[f].center();
        match axis {
            0 => c.x,
            1 => c.y,
            _ => c.z,
        }
    };
    let mid = len / 2;
    order[start..start + len].select_nth_unstable_by(mid, |&a, &b| {
        key(a).partial_cmp(&key(b)).unwrap().then(a.cmp(&b))
    });
    let left = build_node(boxes, order, start, mid, nodes);
    let right = build_node(boxes, order, start + mid, len - mid, nodes);
    let aabb_l = match &nodes[left] {
        Node::Leaf { aabb, .. } | Node::Inner { aabb, .. } => *aabb,
    };
    let aabb_r = match &nodes[right] {
        Node::Leaf { aabb, .. } | Node::Inner { aabb, .. } => *aabb,
    };
    nodes.push(Node::Inner {
        aabb: aabb_l.union(&aabb_r),
        left,
        right,
    });
    nodes.len() - 1
}

fn vec3_recip(d: Vec3) -> Vec3 {
    crate::math::vec3(1.0 / d.x, 1.0 / d.y, 1.0 / d.z)
}

fn ray_hits_aabb(origin: Vec3, inv_dir: Vec3, aabb: &Aabb) -> bool {
    // slab test for the half-infinite ray [0, inf)
    let t1 = (aabb.min.x - origin.x) * inv_dir.x;
    let t2 = (aabb.max.x - origin.x) * inv_dir.x;
    let mut tmin = t1.min(t2);
    let mut tmax = t1.max(t2);
    let t1 = (aabb.min.y - origin.y) * inv_dir.y;
    let t2 = (aabb.max.y - origin.y) * inv_dir.y;
    tmin = tmin.max(t1.min(t2));
    tmax = tmax.min(t1.max(t2));
    let t1 = (aabb.min.z - origin.z) * inv_dir.z;
    let t2 = (aabb.max.z - origin.z) * inv_dir.z;
    tmin = tmin.max(t1.min(t2));
    tmax = tmax.min(t1.max(t2));
    tmax >= tmin.max(0.0)
}

enum RayHit {
    Miss,
    Hit,
    Grazing,
}

const BARY_TOL: f64 = 1e-12;

/// Moller-Trumbore with grazing detection on the barycentric boundary.
fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> RayHit {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale.max(1e-300) {
        // Ray parallel to the triangle plane. If it cannot touch the
        // triangle's slab this is a clean miss; otherwise be conservative.
        let n = e1.cross(e2);
        let dist_to_plane = n.dot(origin - a).abs() / n.norm().max(1e-300);
        if dist_to_plane > 1e-9 {
            return RayHit::Miss;
        }
        return RayHit::Grazing;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv_det;
    if u < -BARY_TOL || u > 1.0 + BARY_TOL {
        return RayHit::Miss;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < -BARY_TOL || u + v > 1.0 + BARY_TOL {
        return RayHit::Miss;
    }
    let t = e2.dot(qvec) * inv_det;
    if t < -BARY_TOL {
        return RayHit::Miss;
    }
    // inside checks done with tolerance: anything within the band counts
    // as grazing a vertex/edge or starting on the surface
    if u < BARY_TOL || v < BARY_TOL || u + v > 1.0 - BARY_TOL || t < BARY_TOL {
        return RayHit::Grazing;
    }
    RayHit::Hit
}
