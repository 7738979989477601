//! End-to-end acceptance suite.
//!
//! Each test covers one shipping criterion at its stated tolerance and
//! prints a `criterion N (...): PASS` line (visible with `--nocapture`).
//! Statistical criteria run 1000 paired trials across seeds 1..=5.

use std::process::Command;
use std::time::Instant;

use planarpose::attitude::{
    canonicalize_euler, euler_from_rotation, rotation_from_euler, wrap_angle, EulerAngles,
    GimbalConfig,
};
use planarpose::frames::{self, FramePose};
use planarpose::geometry::{project, CameraIntrinsics, Mat3, Pose, RotationMatrix, Vec3};
use planarpose::p4p::{solve_p4p, ObservationSet, PlanarTarget};
use planarpose::refine::{
    apply_increment, jacobian, refine, residual, RefineOptions, SE3Increment,
};
use planarpose::simulation::{
    feature_count_comparison, make_feature_set, monte_carlo, reference_intrinsics, snr_sweep,
    Method, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn scenario(half_side: f64, t3: f64, snr_db: f64, trials: usize, seed: u64) -> Scenario {
    Scenario {
        target: make_feature_set(4, half_side).unwrap(),
        true_pose: Pose::new(RotationMatrix::IDENTITY, Vec3::new(0.05, 0.05, t3)),
        intrinsics: reference_intrinsics(),
        snr_db,
        trials,
        seed,
    }
}

fn project_all(target: &PlanarTarget, pose: &Pose, k: &CameraIntrinsics) -> ObservationSet {
    let pixels = (0..target.len())
        .map(|i| {
            let ((u, v), _) = project(k, pose, target.point3d(i)).unwrap();
            [u, v]
        })
        .collect();
    ObservationSet::new(pixels).unwrap()
}

fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn criterion_01_forward_model_fidelity() {
    let t = Instant::now();
    let k = reference_intrinsics();
    let cases: [(f64, f64, [[f64; 2]; 4]); 3] = [
        // Near pose, small square (fourth corner fixed for the reference
        // listing's sign slip).
        (
            0.1333,
            2.0,
            [[-65.1, -65.1], [-65.1, 143.2], [143.2, 143.2], [143.2, -65.1]],
        ),
        // Near pose, large square.
        (
            0.2667,
            2.0,
            [[-169.3, -169.3], [-169.3, 247.4], [247.4, 247.4], [247.4, -169.3]],
        ),
        // Far pose, small square.
        (
            0.1333,
            4.0,
            [[-32.6, -32.6], [-32.6, 71.6], [71.6, 71.6], [71.6, -32.6]],
        ),
    ];
    for (half_side, t3, expected) in cases {
        let target = make_feature_set(4, half_side).unwrap();
        let pose = Pose::new(RotationMatrix::IDENTITY, Vec3::new(0.05, 0.05, t3));
        let obs = project_all(&target, &pose, &k);
        for (got, want) in obs.pixels().iter().zip(expected.iter()) {
            assert!(
                (got[0] - want[0]).abs() <= 0.1 && (got[1] - want[1]).abs() <= 0.1,
                "h = {half_side}, t3 = {t3}: {got:?} vs {want:?}"
            );
        }
    }
    println!("criterion 1 (forward-model fidelity, 0.1 px): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_02_noiseless_exact_recovery() {
    let t = Instant::now();
    let k = reference_intrinsics();

    let mut cases: Vec<(PlanarTarget, Pose)> = Vec::new();
    // The four reference parameter groups (identity rotation, 2 m range).
    for half_side in [0.1333, 0.2667, 0.2667, 0.2667] {
        cases.push((
            make_feature_set(4, half_side).unwrap(),
            Pose::new(RotationMatrix::IDENTITY, Vec3::new(0.05, 0.05, 2.0)),
        ));
    }
    // Plus 100 randomized poses with all depths inside [0.5, 10] m.
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_809);
    let target = make_feature_set(4, 0.1333).unwrap();
    while cases.len() < 104 {
        let axis = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if axis.norm() < 1e-3 {
            continue;
        }
        let angle: f64 = rng.random_range(-0.7..0.7);
        let (rotation, _) = planarpose::refine::se3_exp(&SE3Increment {
            s: Vec3::ZERO,
            rho: axis.scale(angle / axis.norm()),
        });
        let pose = Pose::new(
            rotation,
            Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.8..9.5),
            ),
        );
        let depths: Vec<f64> = (0..4).map(|i| pose.transform(target.point3d(i)).z).collect();
        if depths.iter().all(|&d| (0.5..=10.0).contains(&d)) {
            cases.push((target.clone(), pose));
        }
    }

    for (target, truth) in &cases {
        let obs = project_all(target, truth, &k);
        let found = solve_p4p(target, &obs, &k).unwrap();

        let rot_err = (*found.rotation.matrix() - *truth.rotation.matrix()).max_abs();
        assert!(rot_err <= 1e-6, "rotation error {rot_err}");
        let t_err = (found.translation - truth.translation).max_abs()
            / truth.translation.max_abs();
        assert!(t_err <= 1e-6, "translation error {t_err}");

        let report = refine(&found, target, &obs, &k, &RefineOptions::default()).unwrap();
        assert!(report.final_objective < 1e-16, "objective {}", report.final_objective);
    }
    println!(
        "criterion 2 (noiseless exact recovery, 1e-6 / objective < 1e-16, {} poses): PASS ({:.2?})",
        cases.len(),
        t.elapsed()
    );
}

#[test]
fn criterion_03_jacobian_matches_finite_differences() {
    let t = Instant::now();
    let k = reference_intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let step = 1e-6;
    for _ in 0..100 {
        let n = if rng.random_bool(0.5) { 4 } else { 8 };
        let points = (0..n)
            .map(|_| [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)])
            .collect();
        let target = PlanarTarget::new(points).unwrap();
        let rho = Vec3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.5..0.5),
        );
        let (rotation, _) = planarpose::refine::se3_exp(&SE3Increment { s: Vec3::ZERO, rho });
        let pose = Pose::new(
            rotation,
            Vec3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(1.0..5.0),
            ),
        );
        let mut pixels = project_all(&target, &pose, &k).pixels().to_vec();
        for px in &mut pixels {
            px[0] += rng.random_range(-1.0..1.0);
            px[1] += rng.random_range(-1.0..1.0);
        }
        let obs = ObservationSet::new(pixels).unwrap();

        let analytic = jacobian(&pose, &target, &obs, &k).unwrap();
        let rows = 2 * n;
        let mut numeric = vec![[0.0f64; 6]; rows];
        for col in 0..6 {
            let mut xi = [0.0; 6];
            let inc = |x: [f64; 6]| SE3Increment {
                s: Vec3::new(x[0], x[1], x[2]),
                rho: Vec3::new(x[3], x[4], x[5]),
            };
            xi[col] = step;
            let plus = residual(&apply_increment(&pose, &inc(xi)), &target, &obs, &k).unwrap();
            xi[col] = -step;
            let minus = residual(&apply_increment(&pose, &inc(xi)), &target, &obs, &k).unwrap();
            for row in 0..rows {
                numeric[row][col] = (plus[row] - minus[row]) / (2.0 * step);
            }
        }

        let scale = analytic.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        let max_err = analytic
            .iter()
            .flatten()
            .zip(numeric.iter().flatten())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(max_err / scale <= 1e-5, "relative error {}", max_err / scale);
    }
    println!("criterion 3 (analytic Jacobian vs central differences, 1e-5): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_04_low_snr_ordering() {
    let t = Instant::now();
    // Reference values at this operating point (1000 trials, 15 dB):
    // analytic var(t3) 1.3e-2 / mean 1.8696, refined 1.9e-3 / 1.9555.
    // The SNR reference there is undefined, so the assertions are the
    // ordering and a >= 2x variance ratio, not the absolute numbers.
    for seed in SEEDS {
        let s = scenario(0.1333, 2.0, 15.0, 1000, seed);
        let p4p = monte_carlo(&s, Method::P4p).unwrap();
        let refined = monte_carlo(&s, Method::Refined).unwrap();
        assert!(
            refined.var_t.z < p4p.var_t.z,
            "seed {seed}: refined var {} !< p4p var {}",
            refined.var_t.z,
            p4p.var_t.z
        );
        assert!(
            p4p.var_t.z / refined.var_t.z >= 2.0,
            "seed {seed}: variance ratio {} below 2",
            p4p.var_t.z / refined.var_t.z
        );
        assert!(
            (refined.mean_t.z - 2.0).abs() < (p4p.mean_t.z - 2.0).abs(),
            "seed {seed}: refined bias {} !< p4p bias {}",
            (refined.mean_t.z - 2.0).abs(),
            (p4p.mean_t.z - 2.0).abs()
        );
    }
    println!("criterion 4 (15 dB ordering + >=2x variance ratio, 5 seeds): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_05_convergence_trend_over_snr() {
    let t = Instant::now();
    let snrs: Vec<f64> = (15..=24).map(f64::from).collect();
    for seed in SEEDS {
        let base = scenario(0.2667, 2.0, 15.0, 1000, seed);
        let sweep = snr_sweep(&base, &snrs).unwrap();
        let gaps: Vec<[f64; 3]> = sweep
            .rows
            .iter()
            .map(|row| {
                let d = row.p4p.mean_t - row.refined.mean_t;
                [d.x.abs(), d.y.abs(), d.z.abs()]
            })
            .collect();
        for comp in 0..3 {
            assert!(
                gaps[9][comp] < gaps[0][comp],
                "seed {seed} component {comp}: gap at 24 dB {} !< gap at 15 dB {}",
                gaps[9][comp],
                gaps[0][comp]
            );
            // Non-increasing within a noise band of 20% of the trend's
            // scale (the 15 dB gap); small gaps sit at the Monte Carlo
            // noise floor and may wiggle within that band.
            let band = 0.2 * gaps[0][comp];
            for i in 1..gaps.len() {
                assert!(
                    gaps[i][comp] <= gaps[i - 1][comp] + band,
                    "seed {seed} component {comp}: gap rose {} -> {} beyond the band {band}",
                    gaps[i - 1][comp],
                    gaps[i][comp]
                );
            }
        }
    }
    println!("criterion 5 (15-24 dB gap shrinks, non-increasing in band, 5 seeds): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_06_more_points_reduce_refined_variance() {
    let t = Instant::now();
    for (half_side, t3) in [(0.2667, 4.0), (0.1333, 4.0)] {
        for seed in SEEDS {
            let (four, eight) = feature_count_comparison(half_side, t3, 22.0, 1000, seed).unwrap();
            for (e, f, name) in [
                (eight.var_t.x, four.var_t.x, "t1"),
                (eight.var_t.y, four.var_t.y, "t2"),
                (eight.var_t.z, four.var_t.z, "t3"),
            ] {
                assert!(
                    e < f,
                    "h = {half_side}, seed {seed}: 8-point var({name}) {e} !< 4-point {f}"
                );
            }
        }
    }
    println!("criterion 6 (8-point beats 4-point variance, both sizes, 5 seeds): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_07_larger_target_reduces_depth_variance() {
    let t = Instant::now();
    for seed in SEEDS {
        for method in [Method::P4p, Method::Refined] {
            let small = monte_carlo(&scenario(0.1333, 2.0, 15.0, 1000, seed), method).unwrap();
            let large = monte_carlo(&scenario(0.2667, 2.0, 15.0, 1000, seed), method).unwrap();
            assert!(
                large.var_t.z < small.var_t.z,
                "seed {seed} {method}: large-target var {} !< small-target var {}",
                large.var_t.z,
                small.var_t.z
            );
        }
    }
    println!("criterion 7 (larger target, smaller depth variance, both methods): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_08_attitude_suite() {
    let t = Instant::now();
    use std::f64::consts::{FRAC_PI_2, PI};

    // Round trip on a dense grid excluding pitches within 0.01 rad of
    // vertical. The extraction threshold must lie above cos(0.01) for the
    // whole stated grid to take the regular branch (the shipped default
    // 0.9999 switches 0.0141 rad out).
    let grid_cfg = GimbalConfig { threshold: 0.99999 };
    let n = 25;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let e = EulerAngles::new(
                    -PI + 2.0 * PI * (i as f64 + 1.0) / n as f64,
                    -FRAC_PI_2 + 0.01 + (PI - 0.02) * l as f64 / (n - 1) as f64,
                    -PI + 2.0 * PI * (j as f64 + 1.0) / n as f64,
                );
                let back = euler_from_rotation(&rotation_from_euler(&e), &grid_cfg);
                assert!(
                    (wrap_angle(back.heading - e.heading)).abs() <= 1e-9
                        && (back.pitch - e.pitch).abs() <= 1e-9
                        && (wrap_angle(back.roll - e.roll)).abs() <= 1e-9,
                    "round trip failed at {e:?} -> {back:?}"
                );
            }
        }
    }

    // Gimbal branch: pitch within 1e-6 of vertical, default threshold.
    let default_cfg = GimbalConfig::default();
    for pitch_sign in [1.0, -1.0] {
        for delta in [0.0, 1e-7, 1e-6] {
            let pitch = pitch_sign * (FRAC_PI_2 - delta);
            let e = EulerAngles::new(0.7, pitch, 0.2);
            let r = rotation_from_euler(&e);
            let got = euler_from_rotation(&r, &default_cfg);
            assert_eq!(got.heading, 0.0, "heading not designated 0 at pitch {pitch}");
            // Only the sum (pitch up) / difference (pitch down) of heading
            // and roll is observable.
            let expected_roll = if pitch_sign > 0.0 { 0.7 + 0.2 } else { 0.2 - 0.7 };
            assert!(
                wrap_angle(got.roll - expected_roll).abs() <= 1e-5,
                "combined roll {} vs {expected_roll}",
                got.roll
            );
            let rebuilt = rotation_from_euler(&got);
            let diff = *rebuilt.matrix() - *r.matrix();
            assert!(diff.max_abs() <= 1e-6, "matrix round trip off by {}", diff.max_abs());
        }
    }

    // Canonicalization preserves the matrix to 1e-12.
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..200 {
        let pitch_mag = rng.random_range(FRAC_PI_2 + 1e-6..PI);
        let e = EulerAngles::new(
            rng.random_range(-PI..PI),
            if rng.random_bool(0.5) { pitch_mag } else { -pitch_mag },
            rng.random_range(-PI..PI),
        );
        let folded = canonicalize_euler(&e);
        assert!(folded.pitch.abs() <= FRAC_PI_2 + 1e-12);
        let direct = planarpose::attitude::rotation_from_euler_factored(&e);
        let diff = *rotation_from_euler(&folded).matrix() - direct;
        assert!(diff.max_abs() <= 1e-12, "canonicalization moved the matrix by {}", diff.max_abs());
    }

    println!("criterion 8 (attitude round trip, gimbal branch, canonicalization): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_09_frame_algebra_suite() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random_pose = |rng: &mut ChaCha8Rng| {
        let rho = Vec3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let (rotation, _) = planarpose::refine::se3_exp(&SE3Increment { s: Vec3::ZERO, rho });
        Pose::new(
            rotation,
            Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ),
        )
    };

    for _ in 0..1000 {
        let lw = FramePose::new(frames::LANDMARK, frames::WORLD, random_pose(&mut rng)).unwrap();
        let lc = FramePose::new(frames::LANDMARK, frames::CAMERA, random_pose(&mut rng)).unwrap();
        let vc = FramePose::new(frames::VEHICLE, frames::CAMERA, random_pose(&mut rng)).unwrap();

        // Group laws.
        let identity = frames::compose(&lc, &frames::invert(&lc)).unwrap();
        assert!((*identity.pose.rotation.matrix() - Mat3::IDENTITY).max_abs() <= 1e-12);
        assert!(identity.pose.translation.max_abs() <= 1e-12);

        let p = Vec3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let cam_in_world = frames::compose(&lw, &frames::invert(&lc)).unwrap();
        let left = frames::compose(&cam_in_world, &vc).unwrap();
        let right = frames::compose(&lw, &frames::compose(&frames::invert(&lc), &vc).unwrap()).unwrap();
        assert!((left.transform_point(p) - right.transform_point(p)).max_abs() <= 1e-12);

        // Closed forms against the generic chains.
        let origin_closed = frames::camera_origin_in_world(&lw, &lc).unwrap();
        let origin_chain = cam_in_world.transform_point(Vec3::ZERO);
        assert!((origin_closed - origin_chain).max_abs() <= 1e-12);

        let vw_closed = frames::agv_pose_in_world(&lw, &lc, &vc).unwrap();
        let vw_chain = right;
        assert!(
            (*vw_closed.pose.rotation.matrix() - *vw_chain.pose.rotation.matrix()).max_abs()
                <= 1e-12
        );
        assert!((vw_closed.pose.translation - vw_chain.pose.translation).max_abs() <= 1e-12);
    }
    println!("criterion 9 (frame algebra: group laws + closed forms, 1000 triples): PASS ({:.2?})", t.elapsed());
}

#[test]
fn criterion_10_simulate_is_byte_reproducible() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_planarpose");
    let path = scenario_path("small_target_15db.toml");
    let run = || {
        let out = Command::new(bin)
            .args(["simulate", &path])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "simulate output changed between runs");
    assert!(!first.is_empty());
    println!("criterion 10 (byte-identical simulate reruns): PASS ({:.2?})", t.elapsed());
}
