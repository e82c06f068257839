//! Pinhole projection, the forward model everything else optimizes against.

use nalgebra::{Vector2, Vector3};

use super::{CalibError, CameraIntrinsics, Pose};

/// Projects a 3D point (meters) through a pose and intrinsics into pixels:
/// `u = fx*X/Z + cx`, `v = fy*Y/Z + cy` after `X_cam = R*p + t`. There is no
/// distortion model.
pub fn project_point(
    intr: &CameraIntrinsics,
    pose: &Pose,
    point: &Vector3<f64>,
) -> Result<Vector2<f64>, CalibError> {
    let cam = pose.transform(point);
    if cam.z <= 0.0 {
        return Err(CalibError::BehindCamera);
    }
    Ok(Vector2::new(
        intr.fx * cam.x / cam.z + intr.cx,
        intr.fy * cam.y / cam.z + intr.cy,
    ))
}
