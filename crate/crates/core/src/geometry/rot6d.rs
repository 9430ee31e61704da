use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Continuous 6D rotation representation: the first two columns of a
/// rotation matrix, stored column-major as `[c0x, c0y, c0z, c1x, c1y, c1z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Rotation6D(pub [f64; 6]);

impl Rotation6D {
    pub const IDENTITY: Rotation6D = Rotation6D([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn col0(&self) -> Vec3 {
        Vec3 {
            x: self.0[0],
            y: self.0[1],
            z: self.0[2],
        }
    }

    pub fn col1(&self) -> Vec3 {
        Vec3 {
            x: self.0[3],
            y: self.0[4],
            z: self.0[5],
        }
    }

    /// Gram-Schmidt decode to an orthonormal, det +1 matrix. Errors on zero
    /// or parallel columns.
    pub fn to_matrix(&self) -> Result<Mat3> {
        let b1 = self.col0().normalized().ok_or(Error::DegenerateRotation6d)?;
        let a2 = self.col1();
        let v = a2 - b1 * b1.dot(a2);
        let b2 = v.normalized().ok_or(Error::DegenerateRotation6d)?;
        let b3 = b1.cross(b2);
        Ok(Mat3::from_cols(b1, b2, b3))
    }

    pub fn from_matrix(r: &Mat3) -> Rotation6D {
        let c0 = r.col(0);
        let c1 = r.col(1);
        Rotation6D([c0.x, c0.y, c0.z, c1.x, c1.y, c1.z])
    }

    /// Componentwise linear blend followed by re-orthonormalization; used
    /// for rotation resampling.
    pub fn lerp_orthonormalized(&self, other: &Rotation6D, t: f64) -> Result<Rotation6D> {
        let mut v = [0.0; 6];
        for i in 0..6 {
            v[i] = self.0[i] * (1.0 - t) + other.0[i] * t;
        }
        let m = Rotation6D(v).to_matrix()?;
        Ok(Rotation6D::from_matrix(&m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::rng;

    #[test]
    fn identity_decodes_to_identity() {
        let r = Rotation6D([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).to_matrix().unwrap();
        assert_eq!(r, Mat3::IDENTITY);
    }

    #[test]
    fn z_rotation_round_trip_is_exact() {
        // hand-computed 90 degree rotation about z:
        // columns (0,1,0) and (-1,0,0)
        let six = Rotation6D([0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        let m = six.to_matrix().unwrap();
        assert!(m.apply(vec3(1.0, 0.0, 0.0)).distance(vec3(0.0, 1.0, 0.0)) < 1e-12);
        let back = Rotation6D::from_matrix(&m);
        for i in 0..6 {
            assert!((back.0[i] - six.0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_is_scale_invariant() {
        let r = Rotation6D([2.0, 0.0, 0.0, 0.0, 3.0, 0.0]).to_matrix().unwrap();
        assert_eq!(r, Mat3::IDENTITY);
    }

    #[test]
    fn degenerate_columns_error() {
        assert_eq!(
            Rotation6D([0.0; 6]).to_matrix().unwrap_err(),
            Error::DegenerateRotation6d
        );
        assert_eq!(
            Rotation6D([1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).to_matrix().unwrap_err(),
            Error::DegenerateRotation6d
        );
    }

    #[test]
    fn random_round_trips_are_tight() {
        let mut r = rng::chacha(4, &[13]);
        for _ in 0..1000 {
            let axis = vec3(
                rng::standard_normal(&mut r),
                rng::standard_normal(&mut r),
                rng::standard_normal(&mut r),
            );
            let angle = 3.0 * rng::standard_normal(&mut r);
            let m = Mat3::from_axis_angle(axis, angle);
            let decoded = Rotation6D::from_matrix(&m).to_matrix().unwrap();
            assert!(m.frobenius_distance(&decoded) < 1e-9);
            assert!((decoded.det() - 1.0).abs() < 1e-9);
        }
    }
}
