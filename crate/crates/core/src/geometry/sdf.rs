use crate::error::{Error, Result};
use crate::math::{vec3, Vec3};
use crate::rng::CounterRng;

use super::closest::closest_point;
use super::mesh::TriangleMesh;

const MAX_RAY_RETRIES: usize = 32;

/// Inside/outside by ray-crossing parity with randomized ray directions.
/// Directions come from a fixed counter stream; any grazing hit (vertex/edge
/// contact within a 1e-12 barycentric band) retries with the next direction.
pub fn contains(mesh: &TriangleMesh, p: Vec3) -> Result<bool> {
    if !mesh.watertight() {
        return Err(Error::SignUndefined);
    }
    let mut rng = CounterRng::new(0x5eed_d1ce_c0de_cafe);
    for _ in 0..MAX_RAY_RETRIES {
        let dir = random_unit(&mut rng);
        if let Some(crossings) = mesh.bvh().ray_crossings(mesh, p, dir) {
            return Ok(crossings % 2 == 1);
        }
    }
    // Every direction grazed: the point is (numerically) on the surface.
    Ok(false)
}

/// Signed distance to the mesh surface, negative inside. Requires a
/// watertight mesh; magnitude equals the closest-point distance.
pub fn signed_distance(mesh: &TriangleMesh, p: Vec3) -> Result<f64> {
    if !mesh.watertight() {
        return Err(Error::SignUndefined);
    }
    let hit = closest_point(mesh, p)?;
    if hit.distance < 1e-12 {
        return Ok(0.0);
    }
    let inside = contains(mesh, p)?;
    Ok(if inside { -hit.distance } else { hit.distance })
}

fn random_unit(rng: &mut CounterRng) -> Vec3 {
    loop {
        let v = vec3(
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        );
        let n2 = v.norm_sq();
        if n2 > 1e-4 && n2 <= 1.0 {
            return v / libm::sqrt(n2);
        }
    }
}
