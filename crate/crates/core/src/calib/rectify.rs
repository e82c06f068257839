//! Stereo rectification: rotate both cameras so their image rows line up
//! with the baseline, which restricts block-match search to single rows.

use nalgebra::{Matrix3, Rotation3, Vector3};

use super::{CalibError, CameraIntrinsics, StereoRig};

/// Rotations taking each camera's coordinates into the rectified frame, plus
/// the shared intrinsics both rectified views are rendered with.
#[derive(Debug, Clone)]
pub struct Rectification {
    pub left_rotation: Rotation3<f64>,
    pub right_rotation: Rotation3<f64>,
    pub intrinsics: CameraIntrinsics,
    pub baseline_m: f64,
}

/// Splits the rig's relative rotation evenly between the cameras, then spins
/// both so the x-axis runs along the baseline. After applying the rotations
/// a world point projects to the same row in both views.
pub fn rectify_pair(rig: &StereoRig) -> Result<Rectification, CalibError> {
    let baseline = rig.baseline();
    if baseline < 1e-6 {
        return Err(CalibError::DegenerateBaseline {
            baseline_m: baseline,
        });
    }

    let omega = rig.relative_rotation;
    let half_back = Rotation3::from_scaled_axis(-omega / 2.0);
    let half_fwd = Rotation3::from_scaled_axis(omega / 2.0);

    // Translation after each camera has taken half the relative rotation;
    // the shared frame must send it to the -x axis.
    let u = half_back * rig.relative_translation();
    let e1 = -u / baseline;
    let ez = Vector3::new(0.0, 0.0, 1.0);
    let e2_raw = ez.cross(&e1);
    if e2_raw.norm() < 1e-9 {
        return Err(CalibError::DegenerateConfiguration {
            reason: "baseline parallel to the optical axis".into(),
        });
    }
    let e2 = e2_raw.normalize();
    let e3 = e1.cross(&e2);
    let align = Rotation3::from_matrix_unchecked(Matrix3::from_rows(&[
        e1.transpose(),
        e2.transpose(),
        e3.transpose(),
    ]));

    let fx = (rig.left.fx + rig.left.fy + rig.right.fx + rig.right.fy) / 4.0;
    let intrinsics = CameraIntrinsics::new(
        fx,
        fx,
        (rig.left.cx + rig.right.cx) / 2.0,
        (rig.left.cy + rig.right.cy) / 2.0,
        rig.left.pixel_size_mm,
    )?;

    Ok(Rectification {
        left_rotation: align * half_fwd,
        right_rotation: align * half_back,
        intrinsics,
        baseline_m: baseline,
    })
}
