//! Nonlinear calibration refinement, mono and stereo.
//!
//! Parameters are packed into one flat vector (intrinsics first, then poses
//! as axis-angle plus translation) and handed to the damped least-squares
//! solver with reprojection residuals. Initial poses come from decomposing
//! per-view homographies against the initial intrinsics.

use nalgebra::{DVector, Matrix3, Rotation3, Vector2, Vector3};

use super::{
    board_points, classify_coverage, estimate_homography, init_intrinsics, rotation_vector,
    solve_least_squares, CalibError, CalibrationReport, CameraIntrinsics, CoverageBuckets,
    LeastSquaresOptions, Pose, StereoCalibration, StereoRig,
};
use crate::media::{CameraId, CornerObservationSet, ViewObservation};

/// Decomposes a board-to-image homography into a pose, given intrinsics.
/// Standard planar decomposition: columns of K^-1 H give the first two
/// rotation columns and the translation up to a common scale, fixed so the
/// board sits in front of the camera; the rotation is then projected onto
/// SO(3).
pub(crate) fn pose_from_homography(
    intr: &CameraIntrinsics,
    h: &Matrix3<f64>,
) -> Result<Pose, CalibError> {
    let k_inv = intr
        .matrix()
        .try_inverse()
        .ok_or_else(|| CalibError::InvalidIntrinsics {
            reason: "singular intrinsic matrix".into(),
        })?;
    let b = k_inv * h;
    let norm = b.column(0).norm();
    if norm < 1e-12 {
        return Err(CalibError::DegenerateConfiguration {
            reason: "homography collapses the board x-axis".into(),
        });
    }
    let mut scale = 1.0 / norm;
    if b.column(2)[2] * scale < 0.0 {
        scale = -scale;
    }
    let r1 = b.column(0) * scale;
    let r2 = b.column(1) * scale;
    let t = b.column(2) * scale;
    let r3 = r1.cross(&r2);
    let q = Matrix3::from_columns(&[r1, r2, r3]);

    let svd = q.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u_fix = u.clone_owned();
        u_fix.column_mut(2).neg_mut();
        r = u_fix * v_t;
    }
    let rotation = rotation_vector(&Rotation3::from_matrix_unchecked(r));
    Ok(Pose::new(rotation, Vector3::new(t[0], t[1], t[2])))
}

fn single_camera_views<'a>(
    obs: &'a CornerObservationSet,
) -> Result<Vec<&'a ViewObservation>, CalibError> {
    if obs.views.is_empty() {
        return Err(CalibError::InsufficientViews { got: 0, need: 1 });
    }
    let camera = obs.views[0].camera;
    if obs.views.iter().any(|v| v.camera != camera) {
        return Err(CalibError::ViewMismatch {
            reason: "mixed cameras in a mono calibration set, select one camera first".into(),
        });
    }
    Ok(obs.views.iter().collect())
}

fn board_plane(board_3d: &[Vector3<f64>]) -> Vec<Vector2<f64>> {
    board_3d.iter().map(|p| Vector2::new(p.x, p.y)).collect()
}

fn initial_poses(
    views: &[&ViewObservation],
    board_2d: &[Vector2<f64>],
    intr: &CameraIntrinsics,
) -> Result<Vec<Pose>, CalibError> {
    views
        .iter()
        .map(|v| {
            let h = estimate_homography(board_2d, &v.corners)?;
            pose_from_homography(intr, &h)
        })
        .collect()
}

fn write_pose(params: &mut DVector<f64>, offset: usize, pose: &Pose) {
    for k in 0..3 {
        params[offset + k] = pose.rotation[k];
        params[offset + 3 + k] = pose.translation[k];
    }
}

fn read_pose(params: &DVector<f64>, offset: usize) -> (Vector3<f64>, Vector3<f64>) {
    (
        Vector3::new(params[offset], params[offset + 1], params[offset + 2]),
        Vector3::new(params[offset + 3], params[offset + 4], params[offset + 5]),
    )
}

/// Projects one board through rotation+translation into pixel residuals.
/// Returns false (invalid) when any corner lands on or behind the camera.
#[allow(clippy::too_many_arguments)]
fn accumulate_residuals(
    out: &mut DVector<f64>,
    mut idx: usize,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rot: &Rotation3<f64>,
    trans: &Vector3<f64>,
    board_3d: &[Vector3<f64>],
    observed: &[Vector2<f64>],
) -> bool {
    for (point, obs) in board_3d.iter().zip(observed) {
        let cam = rot * point + trans;
        if cam.z <= 1e-9 {
            return false;
        }
        out[idx] = fx * cam.x / cam.z + cx - obs.x;
        out[idx + 1] = fy * cam.y / cam.z + cy - obs.y;
        idx += 2;
    }
    true
}

/// Jointly refines intrinsics and per-view poses on one camera's views.
///
/// `image_size` (width, height) is needed to classify view coverage for the
/// report; it does not affect the optimization.
pub fn refine_calibration(
    obs: &CornerObservationSet,
    init: &CameraIntrinsics,
    image_size: (u32, u32),
) -> Result<CalibrationReport, CalibError> {
    let views = single_camera_views(obs)?;
    let board_3d = board_points(&obs.board);
    let board_2d = board_plane(&board_3d);
    let poses = initial_poses(&views, &board_2d, init)?;

    let n_views = views.len();
    let n_corners = board_3d.len();
    let mut params = DVector::zeros(4 + 6 * n_views);
    params[0] = init.fx;
    params[1] = init.fy;
    params[2] = init.cx;
    params[3] = init.cy;
    for (i, pose) in poses.iter().enumerate() {
        write_pose(&mut params, 4 + 6 * i, pose);
    }

    let observed: Vec<&[Vector2<f64>]> = views.iter().map(|v| v.corners.as_slice()).collect();
    let residual_len = 2 * n_views * n_corners;
    let board_for_closure = board_3d.clone();
    let observed_owned: Vec<Vec<Vector2<f64>>> =
        observed.iter().map(|c| c.to_vec()).collect();

    let residuals = move |p: &DVector<f64>| -> Option<DVector<f64>> {
        let (fx, fy, cx, cy) = (p[0], p[1], p[2], p[3]);
        if !(fx > 0.0 && fy > 0.0) {
            return None;
        }
        let mut out = DVector::zeros(residual_len);
        for i in 0..n_views {
            let (rvec, tvec) = read_pose(p, 4 + 6 * i);
            let rot = Rotation3::from_scaled_axis(rvec);
            if !accumulate_residuals(
                &mut out,
                2 * i * n_corners,
                fx,
                fy,
                cx,
                cy,
                &rot,
                &tvec,
                &board_for_closure,
                &observed_owned[i],
            ) {
                return None;
            }
        }
        Some(out)
    };

    let solution = solve_least_squares(residuals, params, &LeastSquaresOptions::default())?;
    let p = &solution.params;
    let intrinsics = CameraIntrinsics::new(p[0], p[1], p[2], p[3], init.pixel_size_mm)
        .map_err(|_| CalibError::DivergedPose)?;

    let mut view_poses = Vec::with_capacity(n_views);
    let mut coverage = CoverageBuckets::default();
    for (i, view) in views.iter().enumerate() {
        let (rvec, tvec) = read_pose(p, 4 + 6 * i);
        let pose = Pose::new(rvec, tvec);
        coverage = coverage.merge(classify_coverage(&view.corners, &pose, image_size));
        view_poses.push(pose);
    }

    let final_cost = *solution.cost_history.last().expect("history never empty");
    // Root mean square over scalar pixel residuals (u and v each count one),
    // so with corner noise sigma the reported rms sits near sigma.
    let rms_px = (final_cost / (2 * n_views * n_corners) as f64).sqrt();

    Ok(CalibrationReport {
        intrinsics,
        view_ids: views.iter().map(|v| v.view_id).collect(),
        view_poses,
        rms_px,
        coverage,
        cost_history: solution.cost_history,
    })
}

/// Full mono pipeline: homographies, closed-form intrinsics, refinement.
pub fn calibrate_mono(
    obs: &CornerObservationSet,
    camera: CameraId,
    pixel_size_mm: f64,
    image_size: (u32, u32),
) -> Result<CalibrationReport, CalibError> {
    let sub = obs.select_camera(camera);
    let views = single_camera_views(&sub)?;
    let board_2d = board_plane(&board_points(&sub.board));
    let homographies: Vec<Matrix3<f64>> = views
        .iter()
        .map(|v| estimate_homography(&board_2d, &v.corners))
        .collect::<Result<_, _>>()?;
    let init = init_intrinsics(&homographies, pixel_size_mm)?;
    refine_calibration(&sub, &init, image_size)
}

/// Chordal mean of rotations: the orthogonal projection of the summed
/// matrices back onto SO(3).
fn mean_rotation(rotations: &[Rotation3<f64>]) -> Rotation3<f64> {
    let mut m = Matrix3::zeros();
    for r in rotations {
        m += r.matrix();
    }
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u_fix = u.clone_owned();
        u_fix.column_mut(2).neg_mut();
        r = u_fix * v_t;
    }
    Rotation3::from_matrix_unchecked(r)
}

/// Calibrates the relative pose of a stereo pair from paired views.
///
/// Both observation sets must cover the same view ids of the same board.
/// Initial intrinsics (typically from [`init_intrinsics`] per camera) are
/// refined jointly with the relative pose and the per-view board poses.
pub fn calibrate_stereo(
    left_obs: &CornerObservationSet,
    right_obs: &CornerObservationSet,
    left_init: &CameraIntrinsics,
    right_init: &CameraIntrinsics,
) -> Result<StereoCalibration, CalibError> {
    if left_obs.board != right_obs.board {
        return Err(CalibError::ViewMismatch {
            reason: "left and right observations describe different boards".into(),
        });
    }
    let left_views = single_camera_views(left_obs)?;
    let right_views = single_camera_views(right_obs)?;
    let left_ids: Vec<u32> = left_views.iter().map(|v| v.view_id).collect();
    let right_ids: Vec<u32> = right_views.iter().map(|v| v.view_id).collect();
    if left_ids != right_ids {
        return Err(CalibError::ViewMismatch {
            reason: format!("left views {left_ids:?} vs right views {right_ids:?}"),
        });
    }

    let board_3d = board_points(&left_obs.board);
    let board_2d = board_plane(&board_3d);
    let left_poses = initial_poses(&left_views, &board_2d, left_init)?;
    let right_poses = initial_poses(&right_views, &board_2d, right_init)?;

    // Initial relative pose: average the per-view left-to-right transforms.
    let rel_rotations: Vec<Rotation3<f64>> = left_poses
        .iter()
        .zip(&right_poses)
        .map(|(l, r)| r.rotation_matrix() * l.rotation_matrix().inverse())
        .collect();
    let rel_rot = mean_rotation(&rel_rotations);
    let mut rel_t = Vector3::zeros();
    for (l, r) in left_poses.iter().zip(&right_poses) {
        rel_t += r.translation - rel_rot * l.translation;
    }
    rel_t /= left_poses.len() as f64;

    let n_views = left_views.len();
    let n_corners = board_3d.len();
    // Layout: left intrinsics, right intrinsics, relative pose, then the
    // board-to-left pose per view.
    let mut params = DVector::zeros(14 + 6 * n_views);
    for (offset, k) in [(0, left_init), (4, right_init)] {
        params[offset] = k.fx;
        params[offset + 1] = k.fy;
        params[offset + 2] = k.cx;
        params[offset + 3] = k.cy;
    }
    write_pose(
        &mut params,
        8,
        &Pose {
            rotation: rotation_vector(&rel_rot),
            translation: rel_t,
        },
    );
    for (i, pose) in left_poses.iter().enumerate() {
        write_pose(&mut params, 14 + 6 * i, pose);
    }

    let left_corners: Vec<Vec<Vector2<f64>>> =
        left_views.iter().map(|v| v.corners.clone()).collect();
    let right_corners: Vec<Vec<Vector2<f64>>> =
        right_views.iter().map(|v| v.corners.clone()).collect();
    let residual_len = 4 * n_views * n_corners;
    let board_for_closure = board_3d.clone();

    let residuals = move |p: &DVector<f64>| -> Option<DVector<f64>> {
        let (lfx, lfy, lcx, lcy) = (p[0], p[1], p[2], p[3]);
        let (rfx, rfy, rcx, rcy) = (p[4], p[5], p[6], p[7]);
        if !(lfx > 0.0 && lfy > 0.0 && rfx > 0.0 && rfy > 0.0) {
            return None;
        }
        let (rel_rvec, rel_tvec) = read_pose(p, 8);
        let rel = Rotation3::from_scaled_axis(rel_rvec);
        let mut out = DVector::zeros(residual_len);
        for i in 0..n_views {
            let (rvec, tvec) = read_pose(p, 14 + 6 * i);
            let left_rot = Rotation3::from_scaled_axis(rvec);
            let right_rot = rel * left_rot;
            let right_t = rel * tvec + rel_tvec;
            let base = 4 * i * n_corners;
            if !accumulate_residuals(
                &mut out,
                base,
                lfx,
                lfy,
                lcx,
                lcy,
                &left_rot,
                &tvec,
                &board_for_closure,
                &left_corners[i],
            ) {
                return None;
            }
            if !accumulate_residuals(
                &mut out,
                base + 2 * n_corners,
                rfx,
                rfy,
                rcx,
                rcy,
                &right_rot,
                &right_t,
                &board_for_closure,
                &right_corners[i],
            ) {
                return None;
            }
        }
        Some(out)
    };

    let solution = solve_least_squares(residuals, params, &LeastSquaresOptions::default())?;
    let p = &solution.params;
    let left = CameraIntrinsics::new(p[0], p[1], p[2], p[3], left_init.pixel_size_mm)
        .map_err(|_| CalibError::DivergedPose)?;
    let right = CameraIntrinsics::new(p[4], p[5], p[6], p[7], right_init.pixel_size_mm)
        .map_err(|_| CalibError::DivergedPose)?;

    let (rel_rvec, rel_tvec) = read_pose(p, 8);
    let rel_pose = Pose::new(rel_rvec, rel_tvec);
    let rel_rot = rel_pose.rotation_matrix();
    let baseline_vector = -(rel_rot.inverse() * rel_pose.translation);
    let baseline = baseline_vector.norm();
    if baseline < 1e-6 {
        return Err(CalibError::DegenerateBaseline { baseline_m: baseline });
    }

    let final_cost = *solution.cost_history.last().expect("history never empty");
    // Same convention as the mono report: rms over scalar residuals, here
    // 4 per corner (u, v, both cameras).
    let rms_px = (final_cost / (4 * n_views * n_corners) as f64).sqrt();

    Ok(StereoCalibration {
        rig: StereoRig {
            left,
            right,
            relative_rotation: rel_pose.rotation,
            baseline_vector,
        },
        view_ids: left_ids,
        left_poses: (0..n_views)
            .map(|i| {
                let (rvec, tvec) = read_pose(p, 14 + 6 * i);
                Pose::new(rvec, tvec)
            })
            .collect(),
        rms_px,
        cost_history: solution.cost_history,
    })
}

/// End-to-end stereo calibration from a mixed L/R observation set: per-camera
/// closed-form initialization, then the joint refinement.
pub fn calibrate_rig(
    obs: &CornerObservationSet,
    pixel_size_mm: f64,
) -> Result<StereoCalibration, CalibError> {
    let left = obs.select_camera(CameraId::Left);
    let right = obs.select_camera(CameraId::Right);
    let board_2d = board_plane(&board_points(&obs.board));
    let init_for = |set: &CornerObservationSet| -> Result<CameraIntrinsics, CalibError> {
        let hs: Vec<Matrix3<f64>> = set
            .views
            .iter()
            .map(|v| estimate_homography(&board_2d, &v.corners))
            .collect::<Result<_, _>>()?;
        init_intrinsics(&hs, pixel_size_mm)
    };
    let left_init = init_for(&left)?;
    let right_init = init_for(&right)?;
    calibrate_stereo(&left, &right, &left_init, &right_init)
}
