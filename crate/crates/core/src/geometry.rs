//! Rigid-frame algebra in 2D and 3D.
//!
//! Frames are poses `(A, b)` of a local coordinate system in global
//! coordinates. Rotations are plain `DMatrix<f64>` values checked for
//! orthogonality and unit determinant; 2D rotations use the same code paths
//! as 3D ones with the axis pinned to the out-of-plane direction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a matrix is a proper rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Below this angle a rotation is treated as the identity.
const SMALL_ANGLE: f64 = 1e-9;

/// A rigid pose of a local reference frame: rotation `A` and translation `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct Frame {
    rotation: DMatrix<f64>,
    origin: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    #[serde(rename = "A")]
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<FrameRepr> for Frame {
    type Error = Error;

    fn try_from(repr: FrameRepr) -> Result<Self> {
        let dim = repr.b.len();
        if repr.a.len() != dim * dim {
            return Err(Error::invalid(format!(
                "frame rotation has {} entries, expected {} for dimension {dim}",
                repr.a.len(),
                dim * dim
            )));
        }
        Frame::new(
            DMatrix::from_row_slice(dim, dim, &repr.a),
            DVector::from_vec(repr.b),
        )
    }
}

impl From<Frame> for FrameRepr {
    fn from(frame: Frame) -> Self {
        let dim = frame.dim();
        let mut a = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                a.push(frame.rotation[(r, c)]);
            }
        }
        FrameRepr {
            a,
            b: frame.origin.iter().copied().collect(),
        }
    }
}

impl Frame {
    pub fn new(rotation: DMatrix<f64>, origin: DVector<f64>) -> Result<Self> {
        let dim = origin.len();
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!(
                "frame dimension must be 2 or 3, got {dim}"
            )));
        }
        if rotation.nrows() != dim || rotation.ncols() != dim {
            return Err(Error::invalid(format!(
                "rotation is {}x{}, translation has {dim} entries",
                rotation.nrows(),
                rotation.ncols()
            )));
        }
        check_rotation(&rotation)?;
        Ok(Frame { rotation, origin })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Frame::new(DMatrix::identity(dim, dim), DVector::zeros(dim))
    }

    /// Planar frame rotated by `angle` radians.
    pub fn planar(angle: f64, x: f64, y: f64) -> Self {
        Frame {
            rotation: rotation_2d(angle),
            origin: DVector::from_vec(vec![x, y]),
        }
    }

    /// Spatial frame rotated by `angle` radians about `axis`.
    pub fn spatial(axis: Vector3<f64>, angle: f64, origin: [f64; 3]) -> Result<Self> {
        let aa = AxisAngle::new_3d(angle, axis)?;
        Frame::new(axis_angle_to_rotation(&aa), DVector::from_row_slice(&origin))
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn origin(&self) -> &DVector<f64> {
        &self.origin
    }

    /// Expresses a global point in this frame: `A⁻¹ (p − b)`.
    pub fn to_local(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        Ok(self.rotation.tr_mul(&(p - &self.origin)))
    }

    /// Maps a local point to global coordinates: `A p + b`.
    pub fn to_global(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        Ok(&self.rotation * p + &self.origin)
    }

    /// Applies the rigid transform `self` to another frame, `self ∘ other`.
    pub fn compose(&self, other: &Frame) -> Result<Frame> {
        if other.dim() != self.dim() {
            return Err(Error::invalid("cannot compose frames of different dimension"));
        }
        Ok(Frame {
            rotation: &self.rotation * &other.rotation,
            origin: &self.rotation * &other.origin + &self.origin,
        })
    }

    /// Expresses `other` relative to this frame.
    pub fn relative(&self, other: &Frame) -> Result<Frame> {
        if other.dim() != self.dim() {
            return Err(Error::invalid("frames have different dimensions"));
        }
        Ok(Frame {
            rotation: self.rotation.tr_mul(&other.rotation),
            origin: self.rotation.tr_mul(&(&other.origin - &self.origin)),
        })
    }

    fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point has dimension {}, frame has dimension {}",
                p.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Rotation vector `theta * u`.
///
/// In 2D the axis is `(0, 0, ±1)`, the sign carrying the direction of the
/// planar rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    theta: f64,
    axis: Vector3<f64>,
    dim: usize,
}

impl AxisAngle {
    /// A 3D rotation; negative angles flip the axis so `theta` stays in `[0, π]`.
    pub fn new_3d(angle: f64, axis: Vector3<f64>) -> Result<Self> {
        let norm = axis.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::invalid("rotation axis must be a non-zero vector"));
        }
        let angle = wrap_angle(angle);
        let (theta, axis) = if angle < 0.0 {
            (-angle, -axis / norm)
        } else {
            (angle, axis / norm)
        };
        Ok(AxisAngle { theta, axis, dim: 3 })
    }

    /// A planar rotation by the signed `angle`.
    pub fn new_2d(angle: f64) -> Self {
        let angle = wrap_angle(angle);
        let sign = if angle < 0.0 { -1.0 } else { 1.0 };
        AxisAngle {
            theta: angle.abs(),
            axis: Vector3::new(0.0, 0.0, sign),
            dim: 2,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same axis, angle multiplied by `factor`. The factor is not range checked.
    pub fn scaled(&self, factor: f64) -> AxisAngle {
        AxisAngle {
            theta: self.theta * factor,
            ..*self
        }
    }
}

/// Planar rotation matrix.
pub fn rotation_2d(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Rotation about a principal or arbitrary axis in 3D.
pub fn rotation_3d(axis: Vector3<f64>, angle: f64) -> Result<DMatrix<f64>> {
    Ok(axis_angle_to_rotation(&AxisAngle::new_3d(angle, axis)?))
}

fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // keep +π rather than folding it to -π
    if wrapped == -PI && angle > 0.0 {
        PI
    } else {
        wrapped
    }
}

/// Checks orthogonality and unit determinant within [`ROTATION_TOLERANCE`].
pub fn check_rotation(r: &DMatrix<f64>) -> Result<()> {
    if !r.is_square() || !(r.nrows() == 2 || r.nrows() == 3) {
        return Err(Error::invalid(format!(
            "rotation must be 2x2 or 3x3, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("rotation has non-finite entries"));
    }
    let n = r.nrows();
    let err = (r.transpose() * r - DMatrix::<f64>::identity(n, n)).amax();
    if err > ROTATION_TOLERANCE {
        return Err(Error::invalid(format!(
            "matrix is not orthogonal (max deviation {err:.3e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(Error::invalid(format!(
            "rotation determinant is {det}, expected +1"
        )));
    }
    Ok(())
}

/// Converts a rotation matrix to its rotation vector.
pub fn rotation_to_axis_angle(r: &DMatrix<f64>) -> Result<AxisAngle> {
    check_rotation(r)?;
    if r.nrows() == 2 {
        return Ok(AxisAngle::new_2d(r[(1, 0)].atan2(r[(0, 0)])));
    }

    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    // 2 sin(theta) u
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    // atan2 keeps full precision near 0 and pi, where acos does not
    let theta = (skew.norm() / 2.0).atan2(cos);
    if theta < SMALL_ANGLE {
        return Ok(AxisAngle {
            theta: 0.0,
            axis: Vector3::x(),
            dim: 3,
        });
    }

    let axis = if theta < PI / 2.0 {
        skew / (2.0 * theta.sin())
    } else {
        // symmetric part: cos(theta) I + (1 - cos(theta)) u uᵀ
        let mut outer = (r + r.transpose()) * 0.5;
        for i in 0..3 {
            outer[(i, i)] -= cos;
        }
        outer /= 1.0 - cos;
        let pivot = (0..3)
            .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
            .unwrap_or(0);
        let scale = outer[(pivot, pivot)].max(0.0).sqrt();
        let mut u = Vector3::new(
            outer[(0, pivot)],
            outer[(1, pivot)],
            outer[(2, pivot)],
        ) / scale;
        if u.dot(&skew) < 0.0 {
            u = -u;
        }
        u
    };
    Ok(AxisAngle {
        theta,
        axis: axis.normalize(),
        dim: 3,
    })
}

/// Rodrigues formula (3D) or planar rotation by the signed angle (2D).
pub fn axis_angle_to_rotation(aa: &AxisAngle) -> DMatrix<f64> {
    if aa.dim == 2 {
        return rotation_2d(aa.axis.z.signum() * aa.theta);
    }
    let (s, c) = aa.theta.sin_cos();
    let u = aa.axis;
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0]);
    let uu = DMatrix::from_fn(3, 3, |i, j| u[i] * u[j]);
    DMatrix::<f64>::identity(3, 3) * c + k * s + uu * (1.0 - c)
}

/// Rotation by `fraction * theta` about the axis of `r`.
pub fn fractional_rotation(r: &DMatrix<f64>, fraction: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "rotation fraction {fraction} outside [0, 1]"
        )));
    }
    let aa = rotation_to_axis_angle(r)?;
    Ok(axis_angle_to_rotation(&aa.scaled(fraction)))
}

/// Geodesic angle of a rotation, in `[0, π]`.
pub fn rotation_angle(r: &DMatrix<f64>) -> Result<f64> {
    Ok(rotation_to_axis_angle(r)?.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn rz(angle: f64) -> DMatrix<f64> {
        rotation_3d(Vector3::z(), angle).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn identity_frame_is_transparent() {
        let f = Frame::identity(3).unwrap();
        assert_eq!(f.to_local(&v(&[1.0, 2.0, 3.0])).unwrap(), v(&[1.0, 2.0, 3.0]));
        let f2 = Frame::identity(2).unwrap();
        assert_eq!(f2.to_global(&v(&[0.5, 0.5])).unwrap(), v(&[0.5, 0.5]));
    }

    #[test]
    fn local_and_global_by_hand() {
        let f = Frame::new(rz(FRAC_PI_2), v(&[1.0, 0.0, 0.0])).unwrap();
        let local = f.to_local(&v(&[1.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(local, v(&[1.0, 0.0, 0.0]), epsilon = 1e-15);
        let global = f.to_global(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(global, v(&[1.0, 1.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = Frame::identity(2).unwrap();
        assert!(matches!(
            f.to_local(&v(&[1.0, 2.0, 3.0])),
            Err(Error::InvalidArgument(_))
        ));
        assert!(f.to_global(&v(&[1.0])).is_err());
    }

    #[test]
    fn non_rotations_are_rejected() {
        let reflect = DMatrix::from_diagonal(&v(&[1.0, 1.0, -1.0]));
        assert!(Frame::new(reflect.clone(), v(&[0.0, 0.0, 0.0])).is_err());
        assert!(rotation_to_axis_angle(&reflect).is_err());
        let sheared = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(rotation_to_axis_angle(&sheared).is_err());
    }

    #[test]
    fn axis_angle_canonical_cases() {
        let id = rotation_to_axis_angle(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(id.theta(), 0.0);
        assert_eq!(*id.axis(), Vector3::x());

        let quarter = rotation_to_axis_angle(&rz(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(quarter.theta(), FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(*quarter.axis(), Vector3::z(), epsilon = 1e-12);

        let flip = rotation_to_axis_angle(&DMatrix::from_diagonal(&v(&[1.0, -1.0, -1.0]))).unwrap();
        assert_abs_diff_eq!(flip.theta(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(*flip.axis(), Vector3::x(), epsilon = 1e-12);
    }

    #[test]
    fn rodrigues_canonical_cases() {
        let zero = AxisAngle::new_3d(0.0, Vector3::z()).unwrap();
        assert_abs_diff_eq!(axis_angle_to_rotation(&zero), DMatrix::identity(3, 3), epsilon = 1e-15);
        let quarter = AxisAngle::new_3d(FRAC_PI_2, Vector3::z()).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(axis_angle_to_rotation(&quarter), expected, epsilon = 1e-15);
    }

    #[test]
    fn planar_axis_angle_carries_sign() {
        let aa = rotation_to_axis_angle(&rotation_2d(-0.7)).unwrap();
        assert_abs_diff_eq!(aa.theta(), 0.7, epsilon = 1e-15);
        assert_eq!(aa.axis().z, -1.0);
        assert_abs_diff_eq!(axis_angle_to_rotation(&aa), rotation_2d(-0.7), epsilon = 1e-15);
    }

    #[test]
    fn fractional_rotation_cases() {
        let half = fractional_rotation(&rz(FRAC_PI_2), 0.5).unwrap();
        assert_abs_diff_eq!(half, rz(PI / 4.0), epsilon = 1e-12);
        let r = rotation_3d(Vector3::new(1.0, 2.0, -0.5), 2.1).unwrap();
        assert_abs_diff_eq!(fractional_rotation(&r, 0.0).unwrap(), DMatrix::identity(3, 3), epsilon = 1e-15);
        assert_abs_diff_eq!(fractional_rotation(&r, 1.0).unwrap(), r, epsilon = 1e-12);
        assert!(fractional_rotation(&r, 1.5).is_err());
        assert!(fractional_rotation(&r, -0.1).is_err());
        assert_abs_diff_eq!(
            fractional_rotation(&rotation_2d(1.2), 0.25).unwrap(),
            rotation_2d(0.3),
            epsilon = 1e-15
        );
    }

    #[test]
    fn frame_json_layout() {
        let f = Frame::new(rz(FRAC_PI_2), v(&[1.0, 0.0, 0.0])).unwrap();
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["b"], serde_json::json!([1.0, 0.0, 0.0]));
        let a: Vec<f64> = serde_json::from_value(json["A"].clone()).unwrap();
        // row-major: first row of Rz(π/2) is (0, -1, 0)
        assert_abs_diff_eq!(a[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[3], 1.0, epsilon = 1e-15);
        let back: Frame = serde_json::from_value(json).unwrap();
        assert_abs_diff_eq!(back.rotation(), f.rotation(), epsilon = 1e-15);

        let bad = serde_json::json!({"A": [1.0, 0.0, 0.0, 1.0], "b": [0.0, 0.0, 0.0]});
        assert!(serde_json::from_value::<Frame>(bad).is_err());
    }

    fn unit_axis() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-zero axis", |(x, y, z)| x * x + y * y + z * z > 1e-2)
            .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn local_global_round_trip(
            axis in unit_axis(),
            angle in -PI..PI,
            b in prop::array::uniform3(-5.0..5.0f64),
            p in prop::array::uniform3(-5.0..5.0f64),
        ) {
            let f = Frame::spatial(axis, angle, b).unwrap();
            let p = DVector::from_row_slice(&p);
            let back = f.to_global(&f.to_local(&p).unwrap()).unwrap();
            prop_assert!((back - p).amax() < 1e-12);
        }

        #[test]
        fn axis_angle_round_trip(axis in unit_axis(), theta in 1e-6..(PI - 1e-6)) {
            let aa = AxisAngle::new_3d(theta, axis).unwrap();
            let r = axis_angle_to_rotation(&aa);
            prop_assert!((r.transpose() * &r - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            let back = rotation_to_axis_angle(&r).unwrap();
            prop_assert!((back.theta() - theta).abs() < 1e-9);
            prop_assert!((back.axis() - axis).amax() < 1e-9);
            prop_assert!((axis_angle_to_rotation(&back) - r).amax() < 1e-9);
        }

        #[test]
        fn near_pi_reconstructs(axis in unit_axis(), eps in 0.0..1e-3f64) {
            let r = rotation_3d(axis, PI - eps).unwrap();
            let back = axis_angle_to_rotation(&rotation_to_axis_angle(&r).unwrap());
            prop_assert!((back - r).amax() < 1e-9);
        }

        #[test]
        fn fractional_rotations_compose(
            axis in unit_axis(),
            angle in 0.0..(PI - 1e-3),
            f1 in 0.0..0.5f64,
            f2 in 0.0..0.5f64,
        ) {
            let r = rotation_3d(axis, angle).unwrap();
            let lhs = fractional_rotation(&r, f1).unwrap() * fractional_rotation(&r, f2).unwrap();
            let rhs = fractional_rotation(&r, f1 + f2).unwrap();
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }
    }
}
