//! Levenberg-Marquardt refinement of a pose on SE(3).
//!
//! The objective is the depth-weighted reprojection error: per point the
//! residual pair is `(k1·w - u (k3·w), k2·w - v (k3·w))` with
//! `w = R q + t`, i.e. the pixel error scaled by the point's depth. That
//! weighting keeps the residual linear in `w`, so the 2x3 pixel block of
//! the Jacobian is constant and the full 2n x 6 Jacobian follows from the
//! left-perturbation derivative `dw/dxi = [I | -hat(w)]`.
//!
//! Updates are composed on the left, `T' = exp(dxi) T`, which keeps the
//! iterate exactly on the manifold; no re-orthogonalization is needed
//! beyond the exponential map itself.

use crate::geometry::{hat, CameraIntrinsics, Mat3, Pose, RotationMatrix, Vec3, EPS_DEPTH};
use crate::p4p::{ObservationSet, PlanarTarget};
use crate::{Error, Result};

/// Lie-algebra increment `xi = (s; rho)`: translation part first, then the
/// axis-angle rotation part, matching the Jacobian column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SE3Increment {
    pub s: Vec3,
    pub rho: Vec3,
}

/// Below this angle the Rodrigues coefficients switch to their series
/// expansions to avoid 0/0.
const THETA_TAYLOR: f64 = 1e-6;

/// Damping schedule and stopping rules for [`refine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub step_tol: f64,
    pub objective_tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iterations: 100,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            step_tol: 1e-10,
            objective_tol: 1e-14,
        }
    }
}

impl RefineOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1"));
        }
        if !(self.lambda_init > 0.0) {
            return Err(Error::InvalidOptions("lambda_init must be positive"));
        }
        if !(self.lambda_up > 1.0) {
            return Err(Error::InvalidOptions("lambda_up must exceed 1"));
        }
        if !(self.lambda_down > 0.0 && self.lambda_down < 1.0) {
            return Err(Error::InvalidOptions("lambda_down must be in (0, 1)"));
        }
        if !(self.step_tol > 0.0 && self.objective_tol > 0.0) {
            return Err(Error::InvalidOptions("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a refinement run. Rejected steps are never applied, so
/// `final_objective <= initial_objective` always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineReport {
    pub pose: Pose,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_lengths(target: &PlanarTarget, obs: &ObservationSet) -> Result<()> {
    if target.len() != obs.len() {
        return Err(Error::LengthMismatch {
            points: target.len(),
            pixels: obs.len(),
        });
    }
    Ok(())
}

/// Depth-weighted residual stack, two entries per point.
pub fn residual(
    pose: &Pose,
    target: &PlanarTarget,
    obs: &ObservationSet,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<f64>> {
    check_lengths(target, obs)?;
    let (k1, k2, k3) = (intrinsics.k1(), intrinsics.k2(), intrinsics.k3());
    let mut out = Vec::with_capacity(2 * target.len());
    for i in 0..target.len() {
        let w = pose.transform(target.point3d(i));
        let depth = k3.dot(w);
        if depth <= EPS_DEPTH {
            return Err(Error::PointBehindCamera { depth });
        }
        let [u, v] = obs.pixels()[i];
        out.push(k1.dot(w) - u * depth);
        out.push(k2.dot(w) - v * depth);
    }
    Ok(out)
}

/// `F = 1/2 f^T f` over the residual stack.
pub fn objective(
    pose: &Pose,
    target: &PlanarTarget,
    obs: &ObservationSet,
    intrinsics: &CameraIntrinsics,
) -> Result<f64> {
    Ok(0.5 * residual(pose, target, obs, intrinsics)?.iter().map(|r| r * r).sum::<f64>())
}

/// 2n x 6 Jacobian of the residual w.r.t. a left-multiplied increment,
/// rows in point order, columns `(s, rho)`.
pub fn jacobian(
    pose: &Pose,
    target: &PlanarTarget,
    obs: &ObservationSet,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<[f64; 6]>> {
    check_lengths(target, obs)?;
    let (k1, k2, k3) = (intrinsics.k1(), intrinsics.k2(), intrinsics.k3());
    let mut rows = Vec::with_capacity(2 * target.len());
    for i in 0..target.len() {
        let w = pose.transform(target.point3d(i));
        let depth = k3.dot(w);
        if depth <= EPS_DEPTH {
            return Err(Error::PointBehindCamera { depth });
        }
        let [u, v] = obs.pixels()[i];
        // Residual row = a^T w with constant a, so d(row)/ds = a and
        // d(row)/drho = a^T (-hat(w)) = w x a.
        let a_u = k1 - k3.scale(u);
        let a_v = k2 - k3.scale(v);
        let rot_u = w.cross(a_u);
        let rot_v = w.cross(a_v);
        rows.push([a_u.x, a_u.y, a_u.z, rot_u.x, rot_u.y, rot_u.z]);
        rows.push([a_v.x, a_v.y, a_v.z, rot_v.x, rot_v.y, rot_v.z]);
    }
    Ok(rows)
}

fn outer(a: Vec3, b: Vec3) -> Mat3 {
    Mat3::from_rows(
        [a.x * b.x, a.x * b.y, a.x * b.z],
        [a.y * b.x, a.y * b.y, a.y * b.z],
        [a.z * b.x, a.z * b.y, a.z * b.z],
    )
}

/// Exponential map of an SE(3) increment: the Rodrigues rotation and the
/// translation `V s`, where `V` is the left Jacobian of SO(3).
pub fn se3_exp(inc: &SE3Increment) -> (RotationMatrix, Vec3) {
    let rho = inc.rho;
    let theta2 = rho.dot(rho);
    let theta = theta2.sqrt();

    // coeff_a = sin(t)/t, coeff_b = (1-cos(t))/t^2, coeff_c = (1 - sin(t)/t)/t^2
    let (coeff_a, coeff_b, coeff_c) = if theta < THETA_TAYLOR {
        (
            1.0 - theta2 / 6.0,
            0.5 - theta2 / 24.0,
            1.0 / 6.0 - theta2 / 120.0,
        )
    } else {
        let a = theta.sin() / theta;
        ((a), (1.0 - theta.cos()) / theta2, (1.0 - a) / theta2)
    };

    let rho_outer = outer(rho, rho);
    let rho_hat = hat(rho);

    let delta_r = Mat3::IDENTITY.scale(theta.cos()) + rho_outer.scale(coeff_b) + rho_hat.scale(coeff_a);
    let v_mat = Mat3::IDENTITY.scale(coeff_a) + rho_outer.scale(coeff_c) + rho_hat.scale(coeff_b);

    (RotationMatrix::from_mat3_unchecked(delta_r), v_mat * inc.s)
}

/// Apply a left-multiplied increment to a pose: `T' = exp(xi) T`.
pub fn apply_increment(pose: &Pose, inc: &SE3Increment) -> Pose {
    let (delta_r, delta_t) = se3_exp(inc);
    Pose::new(delta_r * pose.rotation, delta_r * pose.translation + delta_t)
}

/// Solve a dense 6x6 system by Gaussian elimination with partial pivoting.
fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Option<[f64; 6]> {
    for col in 0..6 {
        let pivot_row = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col];
        for row in (col + 1)..6 {
            let factor = a[row][col] / pivot[col];
            for (entry, p) in a[row].iter_mut().zip(pivot.iter()).skip(col) {
                *entry -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 6];
    for col in (0..6).rev() {
        let mut acc = b[col];
        for k in (col + 1)..6 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Levenberg-Marquardt on SE(3), seeded by `pose0` (in practice the P4P
/// result). Candidate steps that increase the objective or push a point
/// behind the camera are rejected and the damping raised.
pub fn refine(
    pose0: &Pose,
    target: &PlanarTarget,
    obs: &ObservationSet,
    intrinsics: &CameraIntrinsics,
    opts: &RefineOptions,
) -> Result<RefineReport> {
    opts.validate()?;
    let mut pose = *pose0;
    let initial_objective = objective(&pose, target, obs, intrinsics)?;
    let mut current = initial_objective;
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;

        let rows = jacobian(&pose, target, obs, intrinsics)?;
        let res = residual(&pose, target, obs, intrinsics)?;

        let mut jtj = [[0.0f64; 6]; 6];
        let mut jtf = [0.0f64; 6];
        for (row, f) in rows.iter().zip(res.iter()) {
            for i in 0..6 {
                jtf[i] += row[i] * f;
                for j in 0..6 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }

        let mut damped = jtj;
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += lambda;
        }
        let step = match solve6(damped, jtf.map(|v| -v)) {
            Some(step) => step,
            None => {
                lambda *= opts.lambda_up;
                continue;
            }
        };
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let inc = SE3Increment {
            s: Vec3::new(step[0], step[1], step[2]),
            rho: Vec3::new(step[3], step[4], step[5]),
        };
        let candidate = apply_increment(&pose, &inc);

        match objective(&candidate, target, obs, intrinsics) {
            Ok(next) if next < current => {
                let decrease = current - next;
                pose = candidate;
                current = next;
                lambda *= opts.lambda_down;
                if step_norm < opts.step_tol || decrease < opts.objective_tol {
                    converged = true;
                    break;
                }
            }
            // Increased objective or a point behind the camera: reject.
            _ => {
                lambda *= opts.lambda_up;
                if step_norm < opts.step_tol {
                    converged = true;
                    break;
                }
            }
        }
    }

    Ok(RefineReport {
        pose,
        initial_objective,
        final_objective: current,
        iterations,
        converged,
    })
}
