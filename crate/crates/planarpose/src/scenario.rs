//! Scenario files: the TOML document the CLI consumes.
//!
//! Layout:
//!
//! ```toml
//! [target]
//! points = [[-0.1333, -0.1333], [-0.1333, 0.1333], [0.1333, 0.1333], [0.1333, -0.1333]]
//!
//! [intrinsics]
//! fx = 1562.5
//! fy = 1562.5
//! cx = 0.0
//! cy = 0.0
//! skew = 0.0
//!
//! [pose]
//! rotation = { matrix = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0] }
//! translation = [0.05, 0.05, 2.0]
//!
//! [noise]
//! snr_db = 15.0   # omit or set to inf for noiseless runs
//! trials = 1000
//! seed = 1
//! ```
//!
//! `rotation` is either `{ matrix = [r11..r33] }` (row-major; snapped back
//! onto SO(3) when within 1e-6 of orthonormal, rejected beyond) or
//! `{ euler = [heading, pitch, roll], convention = "zxy" }`. Optional
//! `[observations]` carries explicit pixels for `solve`, and
//! `[extrinsics]` carries the `vehicle_in_camera` / `landmark_in_world`
//! calibration poses used for world-frame output.

use serde::{Deserialize, Serialize};

use crate::attitude::{rotation_from_euler, EulerAngles};
use crate::frames::{self, FramePose};
use crate::geometry::{CameraIntrinsics, Mat3, Pose, RotationMatrix, Vec3};
use crate::p4p::{ObservationSet, PlanarTarget};
use crate::simulation::Scenario;

/// Rotation-matrix drift accepted from a scenario file before
/// re-orthogonalization is refused.
pub const MATRIX_DRIFT_TOL: f64 = 1e-6;

/// The Euler convention scenario files may name.
pub const EULER_CONVENTION: &str = "zxy";

/// Schema or semantic problem in a scenario document.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("target requires at least 4 points (got {got})")]
    TooFewPoints { got: usize },
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("intrinsics are invalid: fx and fy must be positive and finite")]
    BadIntrinsics,
    #[error("rotation must specify exactly one of `matrix` or `euler`")]
    AmbiguousRotation,
    #[error("rotation matrix needs 9 row-major entries (got {got})")]
    BadMatrixLength { got: usize },
    #[error("rotation matrix is not orthonormal (drift {drift:.3e} exceeds {MATRIX_DRIFT_TOL:.0e})")]
    NotARotation { drift: f64 },
    #[error("unsupported euler convention `{got}` (expected `{EULER_CONVENTION}`)")]
    BadConvention { got: String },
    #[error("`convention` only applies to euler rotations")]
    StrayConvention,
    #[error("noise.trials must be at least 1")]
    BadTrials,
    #[error("noise.snr_db must not be NaN or -inf")]
    BadSnr,
    #[error("observations must list one pixel per target point ({points} points, {pixels} pixels)")]
    ObservationMismatch { points: usize, pixels: usize },
}

type SResult<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub target: TargetSection,
    pub intrinsics: IntrinsicsSection,
    pub pose: PoseSection,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub observations: Option<ObservationsSection>,
    #[serde(default)]
    pub extrinsics: Option<ExtrinsicsSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsSection {
    pub fx: f64,
    pub fy: f64,
    #[serde(default)]
    pub cx: f64,
    #[serde(default)]
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSection {
    pub rotation: RotationSpec,
    pub translation: [f64; 3],
}

/// Either `matrix = [9 reals]` or `euler = [heading, pitch, roll]`
/// (radians) with an optional `convention` tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationsSection {
    pub pixels: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicsSection {
    #[serde(default)]
    pub vehicle_in_camera: Option<FramePoseSection>,
    #[serde(default)]
    pub landmark_in_world: Option<FramePoseSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramePoseSection {
    pub rotation: RotationSpec,
    pub translation: [f64; 3],
}

/// A scenario file resolved into library types.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub observations: Option<ObservationSet>,
    pub vehicle_in_camera: Option<FramePose>,
    pub landmark_in_world: Option<FramePose>,
}

impl RotationSpec {
    pub fn resolve(&self) -> SResult<RotationMatrix> {
        match (&self.matrix, &self.euler) {
            (Some(entries), None) => {
                if self.convention.is_some() {
                    return Err(ScenarioError::StrayConvention);
                }
                if entries.len() != 9 {
                    return Err(ScenarioError::BadMatrixLength { got: entries.len() });
                }
                if !entries.iter().all(|v| v.is_finite()) {
                    return Err(ScenarioError::NonFinite { field: "rotation matrix" });
                }
                let mut m = [0.0; 9];
                m.copy_from_slice(entries);
                RotationMatrix::from_nearly(Mat3(m), MATRIX_DRIFT_TOL).map_err(|_| {
                    ScenarioError::NotARotation { drift: Mat3(m).orthogonality_drift() }
                })
            }
            (None, Some(angles)) => {
                if let Some(conv) = &self.convention {
                    if conv != EULER_CONVENTION {
                        return Err(ScenarioError::BadConvention { got: conv.clone() });
                    }
                }
                if !angles.iter().all(|v| v.is_finite()) {
                    return Err(ScenarioError::NonFinite { field: "euler angles" });
                }
                Ok(rotation_from_euler(&EulerAngles::new(angles[0], angles[1], angles[2])))
            }
            _ => Err(ScenarioError::AmbiguousRotation),
        }
    }
}

fn resolve_pose(rotation: &RotationSpec, translation: &[f64; 3]) -> SResult<Pose> {
    if !translation.iter().all(|v| v.is_finite()) {
        return Err(ScenarioError::NonFinite { field: "translation" });
    }
    Ok(Pose::new(
        rotation.resolve()?,
        Vec3::new(translation[0], translation[1], translation[2]),
    ))
}

impl ScenarioFile {
    /// Parse a TOML document. Unknown keys are rejected.
    pub fn parse_str(text: &str) -> SResult<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Validate the document and build library types from it.
    pub fn resolve(&self) -> SResult<LoadedScenario> {
        if self.target.points.len() < 4 {
            return Err(ScenarioError::TooFewPoints { got: self.target.points.len() });
        }
        let target = PlanarTarget::new(self.target.points.clone())
            .map_err(|_| ScenarioError::NonFinite { field: "target points" })?;

        let k = &self.intrinsics;
        let intrinsics = CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy, k.skew)
            .map_err(|_| ScenarioError::BadIntrinsics)?;

        let true_pose = resolve_pose(&self.pose.rotation, &self.pose.translation)?;

        let noise = self.noise.clone().unwrap_or(NoiseSection {
            snr_db: None,
            trials: None,
            seed: None,
        });
        let snr_db = noise.snr_db.unwrap_or(f64::INFINITY);
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(ScenarioError::BadSnr);
        }
        let trials = noise.trials.unwrap_or(1);
        if trials < 1 {
            return Err(ScenarioError::BadTrials);
        }
        let seed = noise.seed.unwrap_or(0);

        let observations = match &self.observations {
            Some(section) => {
                if section.pixels.len() != target.len() {
                    return Err(ScenarioError::ObservationMismatch {
                        points: target.len(),
                        pixels: section.pixels.len(),
                    });
                }
                Some(
                    ObservationSet::new(section.pixels.clone())
                        .map_err(|_| ScenarioError::NonFinite { field: "observation pixels" })?,
                )
            }
            None => None,
        };

        let mut vehicle_in_camera = None;
        let mut landmark_in_world = None;
        if let Some(ext) = &self.extrinsics {
            if let Some(section) = &ext.vehicle_in_camera {
                let pose = resolve_pose(&section.rotation, &section.translation)?;
                vehicle_in_camera =
                    Some(FramePose::new(frames::VEHICLE, frames::CAMERA, pose).expect("labels differ"));
            }
            if let Some(section) = &ext.landmark_in_world {
                let pose = resolve_pose(&section.rotation, &section.translation)?;
                landmark_in_world =
                    Some(FramePose::new(frames::LANDMARK, frames::WORLD, pose).expect("labels differ"));
            }
        }

        Ok(LoadedScenario {
            scenario: Scenario { target, true_pose, intrinsics, snr_db, trials, seed },
            observations,
            vehicle_in_camera,
            landmark_in_world,
        })
    }
}

/// Parse an SNR list argument: either comma-separated values
/// (`"15,18,21"`) or an inclusive `start:end:step` range (`"15:24:1"`).
/// The result must be nonempty, finite, and strictly increasing.
pub fn parse_snr_list(text: &str) -> SResult<Vec<f64>> {
    let bad = || ScenarioError::NonFinite { field: "snr list" };
    let text = text.trim();
    if text.is_empty() {
        return Err(bad());
    }
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let step: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        if !start.is_finite() || !end.is_finite() || !(step > 0.0) || end < start {
            return Err(bad());
        }
        let span = (end - start) / step + 1e-9;
        // Cap the expansion; a sweep of more than 100k levels is a typo.
        if !(span < 100_000.0) {
            return Err(bad());
        }
        let count = span.floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        text.split(',')
            .map(|part| part.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<SResult<Vec<f64>>>()?
    };
    if values.is_empty()
        || values.iter().any(|v| !v.is_finite())
        || values.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(bad());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL_DOC: &str = r#"
[target]
points = [[-0.1333, -0.1333], [-0.1333, 0.1333], [0.1333, 0.1333], [0.1333, -0.1333]]

[intrinsics]
fx = 1562.5
fy = 1562.5

[pose]
rotation = { matrix = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0] }
translation = [0.05, 0.05, 2.0]

[noise]
snr_db = 15.0
trials = 1000
seed = 1
"#;

    #[test]
    fn parses_and_resolves_a_full_document() {
        let file = ScenarioFile::parse_str(FULL_DOC).unwrap();
        let loaded = file.resolve().unwrap();
        assert_eq!(loaded.scenario.trials, 1000);
        assert_eq!(loaded.scenario.seed, 1);
        assert_eq!(loaded.scenario.snr_db, 15.0);
        assert_eq!(loaded.scenario.target.len(), 4);
        assert_eq!(loaded.scenario.true_pose.translation, Vec3::new(0.05, 0.05, 2.0));
        assert!(loaded.observations.is_none());
    }

    #[test]
    fn missing_noise_section_means_noiseless_single_trial() {
        let doc = r#"
[target]
points = [[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
[intrinsics]
fx = 100.0
fy = 100.0
[pose]
rotation = { euler = [0.0, 0.0, 0.0], convention = "zxy" }
translation = [0.0, 0.0, 5.0]
"#;
        let loaded = ScenarioFile::parse_str(doc).unwrap().resolve().unwrap();
        assert_eq!(loaded.scenario.snr_db, f64::INFINITY);
        assert_eq!(loaded.scenario.trials, 1);
        assert_eq!(loaded.scenario.seed, 0);
    }

    #[test]
    fn rejects_fewer_than_four_points() {
        let doc = FULL_DOC.replace(
            "points = [[-0.1333, -0.1333], [-0.1333, 0.1333], [0.1333, 0.1333], [0.1333, -0.1333]]",
            "points = [[-0.1333, -0.1333], [-0.1333, 0.1333], [0.1333, 0.1333]]",
        );
        let err = ScenarioFile::parse_str(&doc).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("at least 4 points"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let doc = format!("{FULL_DOC}\n[target2]\nx = 1\n");
        assert!(ScenarioFile::parse_str(&doc).is_err());
    }

    #[test]
    fn rejects_rotation_with_both_forms() {
        let spec = RotationSpec {
            matrix: Some(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            euler: Some([0.0, 0.0, 0.0]),
            convention: None,
        };
        assert!(matches!(spec.resolve(), Err(ScenarioError::AmbiguousRotation)));
    }

    #[test]
    fn rejects_wrong_convention() {
        let spec = RotationSpec {
            matrix: None,
            euler: Some([0.1, 0.2, 0.3]),
            convention: Some("xyz".into()),
        };
        assert!(matches!(spec.resolve(), Err(ScenarioError::BadConvention { .. })));
    }

    #[test]
    fn near_rotation_is_snapped_far_rotation_rejected() {
        let mut near = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        near[1] = 5e-7;
        let spec = RotationSpec { matrix: Some(near), euler: None, convention: None };
        let r = spec.resolve().unwrap();
        assert!(r.orthogonality_drift() <= 1e-12);

        let far = vec![1.0, 0.01, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let spec = RotationSpec { matrix: Some(far), euler: None, convention: None };
        assert!(matches!(spec.resolve(), Err(ScenarioError::NotARotation { .. })));
    }

    #[test]
    fn observation_length_must_match_target() {
        let doc = format!("{FULL_DOC}\n[observations]\npixels = [[0.0, 0.0], [1.0, 1.0]]\n");
        let err = ScenarioFile::parse_str(&doc).unwrap().resolve().unwrap_err();
        assert!(matches!(err, ScenarioError::ObservationMismatch { points: 4, pixels: 2 }));
    }

    #[test]
    fn extrinsics_resolve_to_labeled_frame_poses() {
        let doc = format!(
            "{FULL_DOC}\n[extrinsics]\nvehicle_in_camera = {{ rotation = {{ euler = [0.0, 0.0, 0.0] }}, translation = [0.1, 0.0, 0.0] }}\n"
        );
        let loaded = ScenarioFile::parse_str(&doc).unwrap().resolve().unwrap();
        let vc = loaded.vehicle_in_camera.unwrap();
        assert_eq!(vc.source, frames::VEHICLE);
        assert_eq!(vc.target, frames::CAMERA);
        assert!(loaded.landmark_in_world.is_none());
    }

    #[test]
    fn snr_list_range_form() {
        let list = parse_snr_list("15:24:1").unwrap();
        assert_eq!(list.len(), 10);
        assert_eq!(list[0], 15.0);
        assert_eq!(list[9], 24.0);
    }

    #[test]
    fn snr_list_comma_form_and_errors() {
        assert_eq!(parse_snr_list("15, 18, 21").unwrap(), vec![15.0, 18.0, 21.0]);
        assert_eq!(parse_snr_list("17").unwrap(), vec![17.0]);
        assert!(parse_snr_list("").is_err());
        assert!(parse_snr_list("21,18").is_err());
        assert!(parse_snr_list("15:10:1").is_err());
        assert!(parse_snr_list("15:24:0").is_err());
        assert!(parse_snr_list("a,b").is_err());
        // Range expansion is capped instead of allocating unboundedly.
        assert!(parse_snr_list("0:1e308:1e-300").is_err());
        assert!(parse_snr_list("0:1000000:1").is_err());
    }
}
