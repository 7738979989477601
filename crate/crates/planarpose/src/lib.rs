//! Camera pose estimation from four or more coplanar fiducial points.
//!
//! The pipeline mirrors how a marker-based AGV localizer works in practice:
//!
//! 1. [`p4p`] — analytic pose from exactly four coplanar point/pixel
//!    correspondences via a scaled-homography decomposition.
//! 2. [`refine`] — Levenberg–Marquardt on SE(3) minimizing the
//!    depth-weighted reprojection error, seeded by the P4P pose.
//! 3. [`frames`] — labeled frame algebra turning landmark-in-camera into
//!    camera-in-world / vehicle-in-world poses.
//! 4. [`attitude`] — heading/pitch/roll extraction (intrinsic z-x-y) with
//!    gimbal-lock handling.
//! 5. [`simulation`] — seeded Monte Carlo noise studies comparing the
//!    analytic and refined estimators.
//!
//! [`scenario`] and [`report`] provide the file format and output records
//! used by the `planarpose` CLI.

pub mod attitude;
pub mod frames;
pub mod geometry;
pub mod p4p;
pub mod refine;
pub mod report;
pub mod scenario;
pub mod simulation;

pub use attitude::{EulerAngles, GimbalConfig};
pub use frames::FramePose;
pub use geometry::{CameraIntrinsics, Mat3, Pose, RotationMatrix, Vec3};
pub use p4p::{ObservationSet, PlanarTarget};
pub use refine::{RefineOptions, RefineReport};
pub use simulation::{Method, Scenario, SweepResult, TrialStatistics};

/// Errors surfaced by the solver and simulation layers.
///
/// Degeneracy errors (`CollinearFeatures`, `CollinearPixels`, `SingularMatrix`,
/// `DegenerateDepthRatio`) signal bad input geometry; `PointBehindCamera` and
/// `DepthSign` signal configurations that violate the positive-depth premise.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is singular (determinant below threshold)")]
    SingularMatrix,
    #[error("point is behind the camera (depth {depth:.3e} not above the positive floor)")]
    PointBehindCamera { depth: f64 },
    #[error("columns are degenerate and cannot be orthonormalized")]
    DegenerateColumns,
    #[error("matrix is not a rotation (orthogonality drift {drift:.3e})")]
    NotARotation { drift: f64 },
    #[error("first three feature points are collinear")]
    CollinearFeatures,
    #[error("first three pixel points are collinear")]
    CollinearPixels,
    #[error("depth-ratio denominator is near zero (degenerate correspondence)")]
    DegenerateDepthRatio,
    #[error("recovered depth ratios are not positive (w1 = {w1:.3e}, w2 = {w2:.3e})")]
    DepthSign { w1: f64, w2: f64 },
    #[error("target requires at least 4 points (got {got})")]
    InsufficientPoints { got: usize },
    #[error("observation count {pixels} does not match target point count {points}")]
    LengthMismatch { points: usize, pixels: usize },
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("frame labels do not chain: inner target `{inner}` vs outer source `{outer}`")]
    FrameMismatch { inner: String, outer: String },
    #[error("frame pose source and target must differ (both `{0}`)")]
    DegenerateFrameLabels(String),
    #[error("feature set size must be 4 or 8 (got {0})")]
    InvalidCount(usize),
    #[error("invalid camera intrinsics: focal lengths must be positive and finite")]
    InvalidIntrinsics,
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
    #[error("all {0} Monte Carlo trials failed")]
    AllTrialsFailed(usize),
    #[error("SNR list must be nonempty and strictly increasing")]
    InvalidSnrList,
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
