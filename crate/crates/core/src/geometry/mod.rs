//! Triangle-mesh geometry: closest-point and signed-distance queries,
//! basis-point-set encoding, 6D rotation codec, and primitive builders.

mod bps;
mod bvh;
mod closest;
mod mesh;
mod primitives;
mod rot6d;
mod sdf;

pub use bps::{encode_bps, BasisPointSet};
pub use closest::{closest_point, closest_point_on_triangle, ClosestHit};
pub use mesh::{Aabb, TriangleMesh};
pub use primitives::{box_mesh, cylinder_mesh, icosphere, unit_cube};
pub use rot6d::Rotation6D;
pub use sdf::{contains, signed_distance};

/// Face-count threshold above which closest-point queries go through the BVH.
pub const BVH_CLOSEST_THRESHOLD: usize = 5000;
