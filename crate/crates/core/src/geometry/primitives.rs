use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{vec3, Vec3};

use super::mesh::TriangleMesh;

/// Icosphere of the given radius centered at the origin. Subdivision `s`
/// yields `20 * 4^s` faces.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
    let mut vertices = vec![
        vec3(-1.0, phi, 0.0),
        vec3(1.0, phi, 0.0),
        vec3(-1.0, -phi, 0.0),
        vec3(1.0, -phi, 0.0),
        vec3(0.0, -1.0, phi),
        vec3(0.0, 1.0, phi),
        vec3(0.0, -1.0, -phi),
        vec3(0.0, 1.0, -phi),
        vec3(phi, 0.0, -1.0),
        vec3(phi, 0.0, 1.0),
        vec3(-phi, 0.0, -1.0),
        vec3(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        *v = v.normalized().unwrap();
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let m01 = mid(&mut vertices, &mut midpoint, f[0], f[1]);
            let m12 = mid(&mut vertices, &mut midpoint, f[1], f[2]);
            let m20 = mid(&mut vertices, &mut midpoint, f[2], f[0]);
            next.push([f[0], m01, m20]);
            next.push([f[1], m12, m01]);
            next.push([f[2], m20, m12]);
            next.push([m01, m12, m20]);
        }
        faces = next;
    }

    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

fn mid(
    vertices: &mut Vec<Vec3>,
    cache: &mut BTreeMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&i) = cache.get(&key) {
        return i;
    }
    let m = ((vertices[a] + vertices[b]) * 0.5).normalized().unwrap();
    vertices.push(m);
    let i = vertices.len() - 1;
    cache.insert(key, i);
    i
}

/// Axis-aligned box with the given center and half extents.
pub fn box_mesh(center: Vec3, half: Vec3) -> TriangleMesh {
    let c = center;
    let h = half;
    let vertices = vec![
        vec3(c.x - h.x, c.y - h.y, c.z - h.z), // 0
        vec3(c.x + h.x, c.y - h.y, c.z - h.z), // 1
        vec3(c.x + h.x, c.y + h.y, c.z - h.z), // 2
        vec3(c.x - h.x, c.y + h.y, c.z - h.z), // 3
        vec3(c.x - h.x, c.y - h.y, c.z + h.z), // 4
        vec3(c.x + h.x, c.y - h.y, c.z + h.z), // 5
        vec3(c.x + h.x, c.y + h.y, c.z + h.z), // 6
        vec3(c.x - h.x, c.y + h.y, c.z + h.z), // 7
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (z-)
        [4, 5, 6],
        [4, 6, 7], // top (z+)
        [0, 1, 5],
        [0, 5, 4], // front (y-)
        [2, 3, 7],
        [2, 7, 6], // back (y+)
        [1, 2, 6],
        [1, 6, 5], // right (x+)
        [3, 0, 4],
        [3, 4, 7], // left (x-)
    ];
    TriangleMesh::new(vertices, faces).expect("box is valid")
}

/// Unit cube `[0,1]^3`.
pub fn unit_cube() -> TriangleMesh {
    box_mesh(vec3(0.5, 0.5, 0.5), vec3(0.5, 0.5, 0.5))
}

/// Closed cylinder about the z axis, centered at the origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    assert!(segments >= 3);
    let hz = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for i in 0..segments {
        let a = core::f64::consts::TAU * i as f64 / segments as f64;
        vertices.push(vec3(radius * libm::cos(a), radius * libm::sin(a), -hz));
    }
    for i in 0..segments {
        let a = core::f64::consts::TAU * i as f64 / segments as f64;
        vertices.push(vec3(radius * libm::cos(a), radius * libm::sin(a), hz));
    }
    let bottom_center = vertices.len();
    vertices.push(vec3(0.0, 0.0, -hz));
    let top_center = vertices.len();
    vertices.push(vec3(0.0, 0.0, hz));

    let mut faces = Vec::with_capacity(4 * segments);
    for i in 0..segments {
        let j = (i + 1) % segments;
        // side quad split into two triangles, outward normals
        faces.push([i, j, segments + j]);
        faces.push([i, segments + j, segments + i]);
        // caps
        faces.push([bottom_center, j, i]);
        faces.push([top_center, segments + i, segments + j]);
    }
    TriangleMesh::new(vertices, faces).expect("cylinder is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_face_count() {
        assert_eq!(icosphere(1.0, 0).faces().len(), 20);
        assert_eq!(icosphere(1.0, 3).faces().len(), 20 * 64);
    }

    #[test]
    fn cylinder_is_watertight() {
        assert!(cylinder_mesh(0.3, 0.8, 24).watertight());
    }

    #[test]
    fn icosphere_vertices_on_sphere() {
        let m = icosphere(0.7, 2);
        for v in m.vertices() {
            assert!((v.norm() - 0.7).abs() < 1e-12);
        }
    }
}
