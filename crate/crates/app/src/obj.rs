//! Wavefront OBJ ingestion: vertices and triangular faces only. Quads and
//! higher polygons are rejected. Units are meters.

use std::path::Path;

use anyhow::{Context, Result};
use graspdiff_core::geometry::TriangleMesh;
use graspdiff_core::math::{vec3, Vec3};

use crate::usage;

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut nums = [0.0f64; 3];
                for n in nums.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| anyhow::anyhow!("line {}: short vertex", lineno + 1))?;
                    *n = tok
                        .parse()
                        .with_context(|| format!("line {}: bad vertex coordinate", lineno + 1))?;
                }
                vertices.push(vec3(nums[0], nums[1], nums[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return usage(format!(
                        "line {}: only triangular faces are supported ({} vertices found)",
                        lineno + 1,
                        idx.len()
                    ));
                }
                let mut f = [0usize; 3];
                for (slot, tok) in f.iter_mut().zip(idx.iter()) {
                    // formats: v, v/vt, v//vn, v/vt/vn
                    let v = tok.split('/').next().unwrap_or("");
                    let i: isize = v
                        .parse()
                        .with_context(|| format!("line {}: bad face index {tok:?}", lineno + 1))?;
                    if i < 1 {
                        return usage(format!(
                            "line {}: face indices must be positive, got {i}",
                            lineno + 1
                        ));
                    }
                    *slot = (i - 1) as usize;
                }
                faces.push(f);
            }
            _ => {} // comments, normals, etc.
        }
    }
    TriangleMesh::new(vertices, faces)
        .map_err(|e| anyhow::Error::new(crate::UsageError(format!("invalid mesh: {e}"))))
}

pub fn read_obj(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading mesh {}", path.display()))?;
    parse_obj(&text)
}

/// Write a mesh as OBJ (used by tooling and tests).
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use graspdiff_core::geometry::unit_cube;

    #[test]
    fn round_trip_cube() {
        let cube = unit_cube();
        let text = write_obj(&cube);
        let back = parse_obj(&text).unwrap();
        assert_eq!(back.vertices().len(), cube.vertices().len());
        assert_eq!(back.faces(), cube.faces());
        assert!(back.watertight());
    }

    #[test]
    fn quads_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = parse_obj(text).unwrap_err();
        assert!(err.to_string().contains("triangular"));
    }

    #[test]
    fn face_formats_with_slashes() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2//2 3/3/3\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.faces().len(), 1);
    }
}
