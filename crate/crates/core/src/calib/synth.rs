//! Synthetic observation generator: the ground-truth oracle for every
//! calibration test. Projects a known board through known parameters and
//! optionally corrupts the corners with Gaussian noise.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{board_points, project_point, CalibError, CameraIntrinsics, Pose, StereoRig};
use crate::media::{BoardModel, CameraId, CornerObservationSet, ViewObservation};

/// Projects `board` through every pose with `intr`, adding isotropic
/// Gaussian pixel noise of the given sigma. Deterministic for a fixed seed:
/// noise is drawn per view, per corner, u before v.
pub fn generate_synthetic_observations(
    intr: &CameraIntrinsics,
    poses: &[Pose],
    board: &BoardModel,
    noise_sigma_px: f64,
    seed: u64,
) -> Result<CornerObservationSet, CalibError> {
    let noise = noise_source(noise_sigma_px)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = board_points(board);
    let mut views = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        views.push(observe_view(
            i as u32,
            CameraId::Left,
            intr,
            pose,
            &points,
            &noise,
            &mut rng,
        )?);
    }
    Ok(CornerObservationSet {
        board: *board,
        views,
    })
}

/// Stereo variant: `poses` are board-to-left transforms, the right camera
/// observes through the rig's relative pose. Per view the left corners are
/// drawn before the right ones.
pub fn generate_synthetic_stereo_observations(
    rig: &StereoRig,
    poses: &[Pose],
    board: &BoardModel,
    noise_sigma_px: f64,
    seed: u64,
) -> Result<CornerObservationSet, CalibError> {
    let noise = noise_source(noise_sigma_px)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = board_points(board);
    let mut views = Vec::with_capacity(2 * poses.len());
    for (i, pose) in poses.iter().enumerate() {
        let right_pose = rig.right_pose(pose);
        views.push(observe_view(
            i as u32,
            CameraId::Left,
            &rig.left,
            pose,
            &points,
            &noise,
            &mut rng,
        )?);
        views.push(observe_view(
            i as u32,
            CameraId::Right,
            &rig.right,
            &right_pose,
            &points,
            &noise,
            &mut rng,
        )?);
    }
    Ok(CornerObservationSet {
        board: *board,
        views,
    })
}

fn noise_source(sigma: f64) -> Result<Option<Normal<f64>>, CalibError> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(CalibError::DegenerateConfiguration {
            reason: format!("noise sigma {sigma} must be a finite non-negative number"),
        });
    }
    if sigma == 0.0 {
        return Ok(None);
    }
    Ok(Some(Normal::new(0.0, sigma).expect("validated sigma")))
}

fn observe_view(
    view_id: u32,
    camera: CameraId,
    intr: &CameraIntrinsics,
    pose: &Pose,
    points: &[Vector3<f64>],
    noise: &Option<Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<ViewObservation, CalibError> {
    let mut corners = Vec::with_capacity(points.len());
    for point in points {
        let mut px = project_point(intr, pose, point)?;
        if let Some(n) = noise {
            px.x += n.sample(rng);
            px.y += n.sample(rng);
        }
        corners.push(px);
    }
    Ok(ViewObservation {
        view_id,
        camera,
        corners,
    })
}

/// A deterministic sweep of board poses that, for a roughly VGA camera
/// (fx in the 600s, 640x480), drives the board to every image edge, through
/// strong and mild tilts, and through a frame-filling and a distant view.
/// Repeats with a small depth offset when more than twelve poses are asked
/// for. Centers are in meters in the camera frame.
pub fn synthetic_pose_sweep(board: &BoardModel, count: usize) -> Vec<Pose> {
    let ext_x = (board.cols - 1) as f64 * board.square_size_m;
    let ext_y = (board.rows - 1) as f64 * board.square_size_m;
    let diag = (ext_x * ext_x + ext_y * ext_y).sqrt();
    let half = Vector3::new(ext_x / 2.0, ext_y / 2.0, 0.0);

    let x = Vector3::new(1.0, 0.0, 0.0);
    let y = Vector3::new(0.0, 1.0, 0.0);
    let xy = Vector3::new(1.0, 1.0, 0.0).normalize();
    let xny = Vector3::new(1.0, -1.0, 0.0).normalize();
    let xz = Vector3::new(0.5, 0.0, 0.866).normalize();
    let templates: [(Vector3<f64>, Vector3<f64>, f64); 12] = [
        (Vector3::new(0.0, 0.0, 0.50), x, 12.0),
        (Vector3::new(-0.21, 0.0, 0.50), y, -20.0),
        (Vector3::new(0.21, 0.0, 0.50), y, 20.0),
        (Vector3::new(0.0, -0.16, 0.50), x, -18.0),
        (Vector3::new(0.0, 0.16, 0.50), x, 18.0),
        (Vector3::new(0.0, 0.0, diag), x, 0.0),
        (Vector3::new(0.0, 0.0, 5.0 * diag), y, 25.0),
        (Vector3::new(-0.15, -0.10, 0.55), y, -25.0),
        (Vector3::new(0.15, 0.10, 0.55), x, 25.0),
        (Vector3::new(0.10, -0.08, 0.45), xy, 22.0),
        (Vector3::new(-0.10, 0.08, 0.45), xny, -22.0),
        (Vector3::new(0.0, 0.0, 0.60), xz, 25.0),
    ];

    (0..count)
        .map(|i| {
            let (center, axis, deg) = templates[i % templates.len()];
            let lap = (i / templates.len()) as f64;
            let center = center + Vector3::new(0.0, 0.0, 0.04 * lap);
            let rotation = axis * (deg + 2.0 * lap).to_radians();
            let r = nalgebra::Rotation3::from_scaled_axis(rotation);
            Pose::new(rotation, center - r * half)
        })
        .collect()
}
