//! Analytic pose from four coplanar point/pixel correspondences.
//!
//! The construction works on homogeneous triples: stack the first three
//! feature points into `Q` and the first three pixels into `P`, express the
//! fourth of each as `r = Q^-1 q4` and `v = P^-1 p4`, and recover the
//! depth-ratio diagonal `W` from the component ratios. `T = P W Q^-1` then
//! equals the plane-to-image homography up to one unknown positive factor,
//! which a least-squares fit against the unit-column constraint of the
//! rotation resolves. The result is assembled into `(R, t)` and projected
//! onto SO(3) by Gram-Schmidt.
//!
//! Only the first four correspondences participate; additional points are
//! for the iterative refiner.

use crate::geometry::{
    gram_schmidt_so3, invert3, CameraIntrinsics, Mat3, Pose, Vec3, EPS_DEPTH, EPS_SINGULAR,
};
use crate::{Error, Result};

/// Coplanar feature points, metric coordinates in the landmark frame.
/// Each `(x, y)` is implicitly `(x, y, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTarget {
    points: Vec<[f64; 2]>,
}

impl PlanarTarget {
    /// At least four finite points. Collinearity of the first three is
    /// checked at solve time, where it surfaces as a singular system.
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InsufficientPoints { got: points.len() });
        }
        if !points.iter().all(|p| p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PlanarTarget { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point `i` lifted to 3-D landmark coordinates (z = 0 plane).
    pub fn point3d(&self, i: usize) -> Vec3 {
        Vec3::new(self.points[i][0], self.points[i][1], 0.0)
    }

    /// Point `i` as a homogeneous column `(x, y, 1)`.
    fn homogeneous(&self, i: usize) -> Vec3 {
        Vec3::new(self.points[i][0], self.points[i][1], 1.0)
    }
}

/// Observed pixel coordinates, same length and order as the target points.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pixels: Vec<[f64; 2]>,
}

impl ObservationSet {
    pub fn new(pixels: Vec<[f64; 2]>) -> Result<Self> {
        if !pixels.iter().all(|p| p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ObservationSet { pixels })
    }

    pub fn pixels(&self) -> &[[f64; 2]] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    fn homogeneous(&self, i: usize) -> Vec3 {
        Vec3::new(self.pixels[i][0], self.pixels[i][1], 1.0)
    }

    fn check_against(&self, target: &PlanarTarget) -> Result<()> {
        if self.len() != target.len() {
            return Err(Error::LengthMismatch {
                points: target.len(),
                pixels: self.len(),
            });
        }
        Ok(())
    }
}

/// The homography recovered up to a positive scale factor, together with
/// the two depth ratios `(z1'/z3', z2'/z3')` found along the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledHomography {
    pub t_matrix: Mat3,
    pub w_diag: (f64, f64),
}

/// Stack the first three correspondences into homogeneous column matrices
/// and express the fourth of each in that basis.
///
/// Returns `(P, Q, v, r)` with `v = P^-1 p4` and `r = Q^-1 q4`.
pub fn build_point_system(
    target: &PlanarTarget,
    obs: &ObservationSet,
) -> Result<(Mat3, Mat3, Vec3, Vec3)> {
    obs.check_against(target)?;
    let p = Mat3::from_cols(obs.homogeneous(0), obs.homogeneous(1), obs.homogeneous(2));
    let q = Mat3::from_cols(
        target.homogeneous(0),
        target.homogeneous(1),
        target.homogeneous(2),
    );
    let p_inv = invert3(&p).map_err(|_| Error::CollinearPixels)?;
    let q_inv = invert3(&q).map_err(|_| Error::CollinearFeatures)?;
    let v = p_inv * obs.homogeneous(3);
    let r = q_inv * target.homogeneous(3);
    Ok((p, q, v, r))
}

/// Form the depth-ratio diagonal `W = diag(r3 v1 / (r1 v3), r3 v2 / (r2 v3), 1)`
/// and the scaled homography `T = P W Q^-1`.
pub fn compute_scaled_homography(p: &Mat3, q: &Mat3, v: Vec3, r: Vec3) -> Result<ScaledHomography> {
    let den1 = r.x * v.z;
    let den2 = r.y * v.z;
    if den1.abs() < EPS_SINGULAR || den2.abs() < EPS_SINGULAR {
        return Err(Error::DegenerateDepthRatio);
    }
    let w1 = r.z * v.x / den1;
    let w2 = r.z * v.y / den2;
    if w1 <= 0.0 || w2 <= 0.0 {
        // Depth ratios of points in front of the camera are positive.
        return Err(Error::DepthSign { w1, w2 });
    }
    let w = Mat3::diag(w1, w2, 1.0);
    let q_inv = invert3(q)?;
    Ok(ScaledHomography {
        t_matrix: *p * w * q_inv,
        w_diag: (w1, w2),
    })
}

/// Least-squares scale aligning two column norms with 1: the minimizer of
/// `(s n1 - 1)^2 + (s n2 - 1)^2`.
pub fn optimal_scale(n1: f64, n2: f64) -> f64 {
    (n1 + n2) / (n1 * n1 + n2 * n2)
}

/// Recover the pose from the scaled homography.
///
/// `G = K^-1 T` holds the rotation's first two columns and the translation
/// up to a common positive factor. The sign of `T` is fixed by requiring
/// the recovered depth of the third target point to be positive, then the
/// least-squares scale is applied and the rotation completed by cross
/// product and Gram-Schmidt.
pub fn recover_scale_and_pose(
    t_matrix: &Mat3,
    intrinsics: &CameraIntrinsics,
    target: &PlanarTarget,
) -> Result<Pose> {
    let anchor = target.point3d(2);
    let candidate = assemble_pose(&(intrinsics.inverse() * *t_matrix))?;
    let depth = candidate.transform(anchor).z;
    if depth.abs() <= EPS_DEPTH {
        return Err(Error::PointBehindCamera { depth });
    }
    if depth > 0.0 {
        return Ok(candidate);
    }
    // Mirror solution: negating T negates the implied depths exactly
    // (target points have z = 0, so the untouched third column never acts).
    assemble_pose(&(intrinsics.inverse() * t_matrix.scale(-1.0)))
}

fn assemble_pose(g: &Mat3) -> Result<Pose> {
    let g1 = g.col(0);
    let g2 = g.col(1);
    let g3 = g.col(2);
    let n1 = g1.norm();
    let n2 = g2.norm();
    if n1 < EPS_SINGULAR || n2 < EPS_SINGULAR {
        return Err(Error::SingularMatrix);
    }
    let s0 = optimal_scale(n1, n2);
    let r1 = g1.scale(s0);
    let r2 = g2.scale(s0);
    let translation = g3.scale(s0);
    let rotation = gram_schmidt_so3(&Mat3::from_cols(r1, r2, r1.cross(r2)))?;
    Ok(Pose::new(rotation, translation))
}

/// Full analytic solve on the first four correspondences.
///
/// The returned pose is on SO(3) and leaves all four points strictly in
/// front of the camera; any other outcome is an error.
pub fn solve_p4p(
    target: &PlanarTarget,
    obs: &ObservationSet,
    intrinsics: &CameraIntrinsics,
) -> Result<Pose> {
    let (p, q, v, r) = build_point_system(target, obs)?;
    let scaled = compute_scaled_homography(&p, &q, v, r)?;
    let pose = recover_scale_and_pose(&scaled.t_matrix, intrinsics, target)?;
    for i in 0..4 {
        let depth = pose.transform(target.point3d(i)).z;
        if depth <= EPS_DEPTH {
            return Err(Error::PointBehindCamera { depth });
        }
    }
    Ok(pose)
}
