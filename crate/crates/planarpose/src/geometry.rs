//! Fixed-size 3-vector / 3x3-matrix kernel, pinhole camera model, and the
//! Gram-Schmidt projection onto SO(3).
//!
//! Matrices are stored row-major. Inverses use the closed-form adjugate;
//! conditioning is guarded by a determinant floor rather than a
//! decomposition, which is adequate for the well-scaled 3x3 systems built
//! here.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute determinant / column-norm floor below which a configuration is
/// treated as degenerate (collinear points, dependent columns).
pub const EPS_SINGULAR: f64 = 1e-12;

/// Positive depth floor in meters; a projected point must lie strictly in
/// front of the camera by at least this much.
pub const EPS_DEPTH: f64 = 1e-6;

/// Orthogonality / determinant tolerance a rotation matrix must satisfy.
pub const ROTATION_TOL: f64 = 1e-9;

/// 3-vector of f64. Units are context-dependent: meters for points and
/// translations, dimensionless for directions and Lie-algebra elements.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [f64; 9]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    pub const ZERO: Mat3 = Mat3([0.0; 9]);

    pub fn from_rows(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Self {
        Mat3([r0[0], r0[1], r0[2], r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]])
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z])
    }

    pub fn diag(d0: f64, d1: f64, d2: f64) -> Self {
        Mat3([d0, 0.0, 0.0, 0.0, d1, 0.0, 0.0, 0.0, d2])
    }

    /// Entry at `row`, `col` (0-based).
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row * 3 + col]
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.0[i * 3], self.0[i * 3 + 1], self.0[i * 3 + 2])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[j], self.0[3 + j], self.0[6 + j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = self.0;
        for v in &mut out {
            *v *= s;
        }
        Mat3(out)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry (the infinity norm used by the invariants).
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `‖self^T self − I‖∞`, the orthogonality drift of a near-rotation.
    pub fn orthogonality_drift(&self) -> f64 {
        let g = self.transpose() * *self;
        let mut drift = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                drift = drift.max((g.at(i, j) - target).abs());
            }
        }
        drift
    }
}

impl std::ops::Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = (0..3).map(|k| self.at(i, k) * o.at(k, j)).sum();
            }
        }
        Mat3(out)
    }
}

impl std::ops::Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl std::ops::Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        Mat3(out)
    }
}

impl std::ops::Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(o.0.iter()) {
            *a -= b;
        }
        Mat3(out)
    }
}

/// Proper rotation: orthogonal within [`ROTATION_TOL`] and determinant +1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix(Mat3::IDENTITY);

    /// Validate `m` against the rotation invariants.
    pub fn new(m: Mat3) -> Result<Self> {
        let drift = m.orthogonality_drift().max((m.det() - 1.0).abs());
        if !m.is_finite() || drift > ROTATION_TOL {
            return Err(Error::NotARotation { drift });
        }
        Ok(RotationMatrix(m))
    }

    /// Accept a matrix whose drift is within `tol` by snapping it back onto
    /// SO(3); reject anything further away.
    pub fn from_nearly(m: Mat3, tol: f64) -> Result<Self> {
        let drift = m.orthogonality_drift().max((m.det() - 1.0).abs());
        if !m.is_finite() || drift > tol {
            return Err(Error::NotARotation { drift });
        }
        gram_schmidt_so3(&m)
    }

    /// Wrap without checking. Callers must guarantee the invariants hold
    /// (products of rotations, closed-form Rodrigues output).
    pub(crate) fn from_mat3_unchecked(m: Mat3) -> Self {
        debug_assert!(m.orthogonality_drift() <= ROTATION_TOL, "rotation drifted off SO(3)");
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0.at(row, col)
    }

    /// Inverse rotation (plain transpose).
    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }

    pub fn orthogonality_drift(&self) -> f64 {
        self.0.orthogonality_drift()
    }

    /// Rotation about the z axis.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Mat3::from_rows([c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]))
    }
}

impl std::ops::Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul<RotationMatrix> for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, o: RotationMatrix) -> RotationMatrix {
        RotationMatrix::from_mat3_unchecked(self.0 * o.0)
    }
}

/// Rigid transform mapping landmark-frame coordinates into camera-frame
/// coordinates: `w = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: RotationMatrix::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: RotationMatrix, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    /// Apply the transform to a point.
    pub fn transform(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Pinhole camera internal parameter matrix
/// `[[fx, skew, cx], [0, fy, cy], [0, 0, 1]]` (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    m: Mat3,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64) -> Result<Self> {
        let all_finite =
            fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite() && skew.is_finite();
        if !all_finite || fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidIntrinsics);
        }
        Ok(CameraIntrinsics {
            m: Mat3::from_rows([fx, skew, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]),
        })
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Row `k1 = (fx, skew, cx)`.
    pub fn k1(&self) -> Vec3 {
        self.m.row(0)
    }

    /// Row `k2 = (0, fy, cy)`.
    pub fn k2(&self) -> Vec3 {
        self.m.row(1)
    }

    /// Row `k3 = (0, 0, 1)`; `k3 · w` is the depth of a camera-frame point.
    pub fn k3(&self) -> Vec3 {
        self.m.row(2)
    }

    pub fn fx(&self) -> f64 {
        self.m.at(0, 0)
    }

    pub fn fy(&self) -> f64 {
        self.m.at(1, 1)
    }

    pub fn cx(&self) -> f64 {
        self.m.at(0, 2)
    }

    pub fn cy(&self) -> f64 {
        self.m.at(1, 2)
    }

    pub fn skew(&self) -> f64 {
        self.m.at(0, 1)
    }

    /// Closed-form inverse (always exists: fx, fy > 0).
    pub fn inverse(&self) -> Mat3 {
        invert3(&self.m).expect("upper-triangular with positive diagonal")
    }
}

/// Skew-symmetric (hat) matrix: `hat(v) * w == v.cross(w)`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3::from_rows([0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0])
}

/// Closed-form adjugate inverse of a 3x3 matrix.
///
/// Returns [`Error::SingularMatrix`] when |det| falls below
/// [`EPS_SINGULAR`], which for the point systems built here means a
/// collinear feature or pixel triple.
pub fn invert3(m: &Mat3) -> Result<Mat3> {
    let det = m.det();
    if !det.is_finite() || det.abs() <= EPS_SINGULAR {
        return Err(Error::SingularMatrix);
    }
    let a = &m.0;
    let inv_det = 1.0 / det;
    Ok(Mat3([
        (a[4] * a[8] - a[5] * a[7]) * inv_det,
        (a[2] * a[7] - a[1] * a[8]) * inv_det,
        (a[1] * a[5] - a[2] * a[4]) * inv_det,
        (a[5] * a[6] - a[3] * a[8]) * inv_det,
        (a[0] * a[8] - a[2] * a[6]) * inv_det,
        (a[2] * a[3] - a[0] * a[5]) * inv_det,
        (a[3] * a[7] - a[4] * a[6]) * inv_det,
        (a[1] * a[6] - a[0] * a[7]) * inv_det,
        (a[0] * a[4] - a[1] * a[3]) * inv_det,
    ]))
}

/// Project a landmark-frame point through `pose` and the pinhole model.
///
/// Returns the pixel `(u, v)` and the camera-frame depth `k3 · w`.
/// No distortion model is applied.
pub fn project(
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    point: Vec3,
) -> Result<((f64, f64), f64)> {
    let w = pose.transform(point);
    let depth = intrinsics.k3().dot(w);
    if depth <= EPS_DEPTH {
        return Err(Error::PointBehindCamera { depth });
    }
    let u = intrinsics.k1().dot(w) / depth;
    let v = intrinsics.k2().dot(w) / depth;
    Ok(((u, v), depth))
}

/// Orthonormalize the columns of `m` in order and project onto SO(3).
///
/// Column 1 is normalized, column 2 de-projected then normalized, and
/// column 3 replaced by the cross product, so the result always has
/// determinant +1. The first column is preserved exactly in direction.
pub fn gram_schmidt_so3(m: &Mat3) -> Result<RotationMatrix> {
    let c0 = m.col(0);
    let n0 = c0.norm();
    if n0 < EPS_SINGULAR {
        return Err(Error::DegenerateColumns);
    }
    let e0 = c0.scale(1.0 / n0);

    let c1 = m.col(1);
    let c1_perp = c1 - e0.scale(e0.dot(c1));
    let n1 = c1_perp.norm();
    if n1 < EPS_SINGULAR {
        return Err(Error::DegenerateColumns);
    }
    let e1 = c1_perp.scale(1.0 / n1);

    let e2 = e0.cross(e1);
    Ok(RotationMatrix::from_mat3_unchecked(Mat3::from_cols(e0, e1, e2)))
}
