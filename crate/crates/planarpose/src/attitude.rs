//! Attitude angles: heading / pitch / roll against rotation matrices.
//!
//! The convention is intrinsic z-x-y: heading about the body z axis, then
//! pitch about the (rotated) x axis, then roll about the (rotated) y axis;
//! the composed matrix is `Tz(heading) Tx(pitch) Ty(roll)`. Pitch lives in
//! [-pi/2, pi/2]; heading and roll in (-pi, pi].
//!
//! Near vertical pitch the extraction degenerates: heading and roll act
//! about the same axis and only their sum (pitch = +pi/2) or difference
//! (pitch = -pi/2) is observable. A threshold on the matrix entry that
//! carries sin(pitch) switches to the degenerate branch, which fixes
//! heading = 0 and attributes everything to roll.

use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, RotationMatrix};

/// Heading (psi), pitch (theta), roll (gamma), all in radians.
///
/// Extraction returns pitch in [-pi/2, pi/2] and heading/roll in
/// (-pi, pi]; construction accepts any angles (see [`canonicalize_euler`]
/// for folding an out-of-range pitch back).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub heading: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(heading: f64, pitch: f64, roll: f64) -> Self {
        EulerAngles { heading, pitch, roll }
    }
}

/// Switch-over threshold for the vertical-pitch branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalConfig {
    /// In (0, 1): the degenerate branch triggers once |sin(pitch)| exceeds
    /// this. The default 0.9999 puts the switch about 0.81 degrees from
    /// vertical, far above the orthogonality noise of solved rotations.
    pub threshold: f64,
}

impl Default for GimbalConfig {
    fn default() -> Self {
        GimbalConfig { threshold: 0.9999 }
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let x = a.rem_euclid(TAU);
    if x > PI {
        x - TAU
    } else {
        x
    }
}

fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::from_rows([c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0])
}

fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::from_rows([1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c])
}

fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::from_rows([c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c])
}

/// Build the rotation `Tz(heading) Tx(pitch) Ty(roll)` from its closed form.
pub fn rotation_from_euler(e: &EulerAngles) -> RotationMatrix {
    let (s_psi, c_psi) = e.heading.sin_cos();
    let (s_th, c_th) = e.pitch.sin_cos();
    let (s_ga, c_ga) = e.roll.sin_cos();
    let m = Mat3::from_rows(
        [
            c_psi * c_ga - s_psi * s_th * s_ga,
            -s_psi * c_th,
            c_psi * s_ga + s_psi * c_ga * s_th,
        ],
        [
            s_psi * c_ga + c_psi * s_th * s_ga,
            c_psi * c_th,
            s_psi * s_ga - c_psi * s_th * c_ga,
        ],
        [-c_th * s_ga, s_th, c_th * c_ga],
    );
    // Rows/columns are unit by construction; wrap without re-checking.
    RotationMatrix::from_nearly(m, 1e-12).expect("closed form is orthonormal")
}

/// The same rotation assembled from the three factor matrices. Used as an
/// independent route to cross-check the closed form.
pub fn rotation_from_euler_factored(e: &EulerAngles) -> Mat3 {
    rot_z(e.heading) * rot_x(e.pitch) * rot_y(e.roll)
}

/// Extract attitude angles from a rotation matrix.
///
/// Away from vertical pitch, pitch comes from `arcsin(r32)` and heading /
/// roll from two-argument arctangents of the entries the cosine divides
/// out of. Past the threshold, heading is designated 0 and roll carries
/// the combined angle.
pub fn euler_from_rotation(r: &RotationMatrix, cfg: &GimbalConfig) -> EulerAngles {
    let r32 = r.at(2, 1);
    if r32.abs() <= cfg.threshold {
        let pitch = r32.clamp(-1.0, 1.0).asin();
        let heading = (-r.at(0, 1)).atan2(r.at(1, 1));
        let roll = (-r.at(2, 0)).atan2(r.at(2, 2));
        EulerAngles { heading, pitch, roll }
    } else {
        let pitch = if r32 > 0.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        let roll = r.at(0, 2).atan2(r.at(0, 0));
        EulerAngles { heading: 0.0, pitch, roll }
    }
}

/// Fold a pitch outside [-pi/2, pi/2] back into range using the
/// equivalence `(psi, theta, gamma) ~ (psi + pi, pi - theta, gamma + pi)`
/// (mirrored for negative pitch). The represented rotation is unchanged.
pub fn canonicalize_euler(e: &EulerAngles) -> EulerAngles {
    use std::f64::consts::{FRAC_PI_2, PI};
    if e.pitch > FRAC_PI_2 && e.pitch <= PI {
        EulerAngles {
            heading: wrap_angle(e.heading + PI),
            pitch: PI - e.pitch,
            roll: wrap_angle(e.roll + PI),
        }
    } else if e.pitch < -FRAC_PI_2 && e.pitch >= -PI {
        EulerAngles {
            heading: wrap_angle(e.heading + PI),
            pitch: -PI - e.pitch,
            roll: wrap_angle(e.roll + PI),
        }
    } else {
        *e
    }
}
