use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{vec3, RigidTransform, Vec3};

use super::bvh::Bvh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Aabb {
        Aabb {
            min: vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: vec3(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min_by_component(p);
        self.max = self.max.max_by_component(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_sq(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        dx * dx + dy * dy + dz * dz
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }
}

/// An indexed triangle mesh in meters. Immutable after construction; the
/// bounding-volume hierarchy is built once and shared by all queries.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    watertight: bool,
    aabb: Aabb,
    bvh: Bvh,
}

impl TriangleMesh {
    /// Validates face indices and rejects zero-area faces. The watertight
    /// flag records whether every undirected edge is shared by exactly two
    /// faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<TriangleMesh> {
        if faces.is_empty() || vertices.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        for f in &faces {
            for &i in f {
                if i >= vertices.len() {
                    return Err(Error::ShapeMismatch {
                        field: "faces",
                        expected: vertices.len(),
                        got: i,
                    });
                }
            }
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let area2 = (b - a).cross(c - a).norm_sq();
            if area2 < 1e-28 {
                return Err(Error::EmptyGeometry);
            }
        }
        let watertight = edges_all_shared_twice(&faces);
        let mut aabb = Aabb::empty();
        for v in &vertices {
            aabb.grow(*v);
        }
        let bvh = Bvh::build(&vertices, &faces);
        Ok(TriangleMesh {
            vertices,
            faces,
            watertight,
            aabb,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn watertight(&self) -> bool {
        self.watertight
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub(crate) fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn triangle(&self, face: usize) -> (Vec3, Vec3, Vec3) {
        let f = self.faces[face];
        (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]])
    }

    /// Longest edge in the mesh; useful as a discretization tolerance.
    pub fn max_edge_length(&self) -> f64 {
        let mut m: f64 = 0.0;
        for f in &self.faces {
            let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
            m = m.max(a.distance(b)).max(b.distance(c)).max(c.distance(a));
        }
        m
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        let vertices = self.vertices.iter().map(|v| t.apply(*v)).collect();
        TriangleMesh::new(vertices, self.faces.clone()).expect("transform preserves validity")
    }

    pub fn translated(&self, d: Vec3) -> TriangleMesh {
        self.transformed(&RigidTransform::translation_only(d))
    }
}

fn edges_all_shared_twice(faces: &[[usize; 3]]) -> bool {
    let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for f in faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            let key = (a.min(b), a.max(b));
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts.values().all(|&c| c == 2)
}
