//! Labeled coordinate-frame algebra.
//!
//! A [`FramePose`] carries the pose of its `source` frame relative to its
//! `target` frame: a point `a` in the source frame reads `R a + t` in the
//! target frame. Labels are plain strings checked when poses are chained,
//! which lets scenario files name frames freely; the four canonical names
//! used by the localization chain are provided as constants.

use serde::{Deserialize, Serialize};

use crate::geometry::{gram_schmidt_so3, Pose, RotationMatrix, Vec3, ROTATION_TOL};
use crate::{Error, Result};

pub const LANDMARK: &str = "landmark";
pub const CAMERA: &str = "camera";
pub const VEHICLE: &str = "vehicle";
pub const WORLD: &str = "world";

/// Pose of `source` relative to `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePose {
    pub source: String,
    pub target: String,
    pub pose: Pose,
}

impl FramePose {
    pub fn new(source: impl Into<String>, target: impl Into<String>, pose: Pose) -> Result<Self> {
        let source = source.into();
        let target = target.into();
        if source == target {
            return Err(Error::DegenerateFrameLabels(source));
        }
        Ok(FramePose { source, target, pose })
    }

    /// Express a source-frame point in the target frame: `R a + t`.
    pub fn transform_point(&self, a: Vec3) -> Vec3 {
        self.pose.transform(a)
    }
}

/// Multiply two rotations, snapping back onto SO(3) if accumulated
/// round-off ever exceeds the rotation tolerance.
fn compose_rotations(outer: &RotationMatrix, inner: &RotationMatrix) -> RotationMatrix {
    let product = *outer.matrix() * *inner.matrix();
    if product.orthogonality_drift() > ROTATION_TOL {
        gram_schmidt_so3(&product).expect("product of rotations has orthonormal columns")
    } else {
        RotationMatrix::new(product).expect("within tolerance")
    }
}

/// Swap source and target: rotation transposed, translation `-R^T t`.
pub fn invert(fp: &FramePose) -> FramePose {
    let rt = fp.pose.rotation.transpose();
    FramePose {
        source: fp.target.clone(),
        target: fp.source.clone(),
        pose: Pose::new(rt, -(rt * fp.pose.translation)),
    }
}

/// Chain two frame poses; `inner.target` must equal `outer.source`.
pub fn compose(outer: &FramePose, inner: &FramePose) -> Result<FramePose> {
    if inner.target != outer.source {
        return Err(Error::FrameMismatch {
            inner: inner.target.clone(),
            outer: outer.source.clone(),
        });
    }
    Ok(FramePose {
        source: inner.source.clone(),
        target: outer.target.clone(),
        pose: Pose::new(
            compose_rotations(&outer.pose.rotation, &inner.pose.rotation),
            outer.pose.rotation * inner.pose.translation + outer.pose.translation,
        ),
    })
}

/// Position of the camera origin in the world frame, in closed form:
/// `o_w = -R_o^w (R_o^c)^T t_o^c + t_o^w`.
///
/// Equals `compose(landmark_in_world, invert(landmark_in_camera))` applied
/// to the zero vector.
pub fn camera_origin_in_world(
    landmark_in_world: &FramePose,
    landmark_in_camera: &FramePose,
) -> Result<Vec3> {
    if landmark_in_world.source != landmark_in_camera.source {
        return Err(Error::FrameMismatch {
            inner: landmark_in_camera.source.clone(),
            outer: landmark_in_world.source.clone(),
        });
    }
    let r_ow = &landmark_in_world.pose.rotation;
    let r_co = landmark_in_camera.pose.rotation.transpose();
    let t_oc = landmark_in_camera.pose.translation;
    Ok(-(*r_ow * (r_co * t_oc)) + landmark_in_world.pose.translation)
}

/// Vehicle pose in the world frame, in closed form:
/// rotation `R_o^w R_c^o R_v^c`, translation
/// `R_o^w R_c^o (t_v^c - t_o^c) + t_o^w`.
///
/// Equals the chain
/// `compose(landmark_in_world, compose(invert(landmark_in_camera), vehicle_in_camera))`.
pub fn agv_pose_in_world(
    landmark_in_world: &FramePose,
    landmark_in_camera: &FramePose,
    vehicle_in_camera: &FramePose,
) -> Result<FramePose> {
    if landmark_in_world.source != landmark_in_camera.source {
        return Err(Error::FrameMismatch {
            inner: landmark_in_camera.source.clone(),
            outer: landmark_in_world.source.clone(),
        });
    }
    if vehicle_in_camera.target != landmark_in_camera.target {
        return Err(Error::FrameMismatch {
            inner: vehicle_in_camera.target.clone(),
            outer: landmark_in_camera.target.clone(),
        });
    }
    let r_ow = &landmark_in_world.pose.rotation;
    let r_co = landmark_in_camera.pose.rotation.transpose();
    let r_ow_co = compose_rotations(r_ow, &r_co);
    let rotation = compose_rotations(&r_ow_co, &vehicle_in_camera.pose.rotation);
    let translation = r_ow_co
        * (vehicle_in_camera.pose.translation - landmark_in_camera.pose.translation)
        + landmark_in_world.pose.translation;
    FramePose::new(
        vehicle_in_camera.source.clone(),
        landmark_in_world.target.clone(),
        Pose::new(rotation, translation),
    )
}
