//! Camera calibration from checkerboard corners.
//!
//! The pipeline is the classic planar one: estimate a homography per view,
//! initialize intrinsics from the absolute-conic linear system, initialize
//! per-view poses from the homographies, then refine everything jointly with
//! damped least squares on reprojection error. Stereo calibration chains two
//! mono initializations and refines the relative pose between the cameras.
//! The module also classifies how well a view sweep covers the image
//! (edges, skew, size) and computes rectifying rotations for block matching.

mod coverage;
mod homography;
mod project;
mod rectify;
mod refine;
mod report;
mod solver;
mod synth;
mod zhang;

pub use coverage::classify_coverage;
pub use homography::estimate_homography;
pub use project::project_point;
pub use rectify::{rectify_pair, Rectification};
pub use refine::{calibrate_mono, calibrate_rig, calibrate_stereo, refine_calibration};
pub use report::{format_mono_report, format_rig_report, parse_rig_report};
pub use solver::{solve_least_squares, LeastSquaresOptions, LeastSquaresSolution};
pub use synth::{
    generate_synthetic_observations, generate_synthetic_stereo_observations, synthetic_pose_sweep,
};
pub use zhang::init_intrinsics;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::media::BoardModel;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("point projects behind the camera")]
    BehindCamera,
    #[error("degenerate configuration: {reason}")]
    DegenerateConfiguration { reason: String },
    #[error("need at least {need} views, got {got}")]
    InsufficientViews { got: usize, need: usize },
    #[error("linear system ill-conditioned (condition {condition:.3e}), views too close to fronto-parallel")]
    IllConditioned { condition: f64 },
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("optimizer left the valid parameter domain")]
    DivergedPose,
    #[error("left/right observations do not match: {reason}")]
    ViewMismatch { reason: String },
    #[error("baseline {baseline_m} m too small to be a stereo rig")]
    DegenerateBaseline { baseline_m: f64 },
    #[error("invalid intrinsics: {reason}")]
    InvalidIntrinsics { reason: String },
    #[error("report line {line}: {reason}")]
    BadReport { line: usize, reason: String },
    #[error("report missing parameter {name}")]
    MissingParam { name: String },
}

/// Pinhole intrinsics, no distortion terms.
///
/// `fx`/`fy` are the optimized pixel-focal quantities; `pixel_size_mm` is
/// physical metadata carried so the focal length can also be stated in
/// millimeters (`focal_mm = fx * pixel_size_mm`), matching how camera
/// datasheets quote it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub pixel_size_mm: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, pixel_size_mm: f64) -> Result<Self, CalibError> {
        let all_finite =
            fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite() && pixel_size_mm.is_finite();
        if !all_finite || fx <= 0.0 || fy <= 0.0 || pixel_size_mm <= 0.0 {
            return Err(CalibError::InvalidIntrinsics {
                reason: format!("fx={fx} fy={fy} cx={cx} cy={cy} pixel_size_mm={pixel_size_mm}"),
            });
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            pixel_size_mm,
        })
    }

    /// Physical focal length in millimeters.
    pub fn focal_mm(&self) -> f64 {
        self.fx * self.pixel_size_mm
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

/// Rigid transform from board (or left-camera) coordinates into camera
/// coordinates: `X_cam = R * X + t`. Rotation is an axis-angle vector whose
/// magnitude is kept in [0, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
        .canonicalized()
    }

    pub fn identity() -> Self {
        Self {
            rotation: Vector3::zeros(),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(self.rotation)
    }

    pub fn transform(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * point + self.translation
    }

    /// Wraps the axis-angle magnitude into [0, pi] without changing the
    /// rotation it represents.
    pub fn canonicalized(mut self) -> Self {
        let angle = self.rotation.norm();
        if angle > std::f64::consts::PI {
            // Same rotation, magnitude folded to the nearest whole turn:
            // |angle - 2pi*round(angle/2pi)| <= pi.
            let two_pi = 2.0 * std::f64::consts::PI;
            let wrapped = angle - two_pi * (angle / two_pi).round();
            self.rotation *= wrapped / angle;
            debug_assert!(self.rotation.norm() <= std::f64::consts::PI + 1e-12);
        }
        self
    }
}

/// Calibrated stereo pair. `relative_rotation`/`relative_translation` map
/// left-camera coordinates into right-camera coordinates; `baseline_vector`
/// is the right camera center expressed in the left frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoRig {
    pub left: CameraIntrinsics,
    pub right: CameraIntrinsics,
    pub relative_rotation: Vector3<f64>,
    pub baseline_vector: Vector3<f64>,
}

impl StereoRig {
    pub fn baseline(&self) -> f64 {
        self.baseline_vector.norm()
    }

    pub fn relative_rotation_matrix(&self) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(self.relative_rotation)
    }

    /// Translation part of the left-to-right transform.
    pub fn relative_translation(&self) -> Vector3<f64> {
        -(self.relative_rotation_matrix() * self.baseline_vector)
    }

    /// Board-to-right pose given the board-to-left pose.
    pub fn right_pose(&self, left: &Pose) -> Pose {
        let rot = self.relative_rotation_matrix() * left.rotation_matrix();
        let t = self.relative_rotation_matrix() * left.translation + self.relative_translation();
        Pose::new(rotation_vector(&rot), t)
    }
}

/// Which parts of the image and pose space a calibration sweep exercised.
/// One flag per recommended capture: board at each image edge, skewed views,
/// a view filling the frame, a distant view, and tilted views.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageBuckets {
    pub x_left: bool,
    pub x_right: bool,
    pub y_top: bool,
    pub y_bottom: bool,
    pub skew: bool,
    pub size_fill: bool,
    pub size_far: bool,
    pub overall_tilt: bool,
}

impl CoverageBuckets {
    pub fn merge(self, other: Self) -> Self {
        Self {
            x_left: self.x_left || other.x_left,
            x_right: self.x_right || other.x_right,
            y_top: self.y_top || other.y_top,
            y_bottom: self.y_bottom || other.y_bottom,
            skew: self.skew || other.skew,
            size_fill: self.size_fill || other.size_fill,
            size_far: self.size_far || other.size_far,
            overall_tilt: self.overall_tilt || other.overall_tilt,
        }
    }

    /// (name, filled) pairs in report order.
    pub fn entries(&self) -> [(&'static str, bool); 8] {
        [
            ("x_left", self.x_left),
            ("x_right", self.x_right),
            ("y_top", self.y_top),
            ("y_bottom", self.y_bottom),
            ("skew", self.skew),
            ("size_fill", self.size_fill),
            ("size_far", self.size_far),
            ("overall_tilt", self.overall_tilt),
        ]
    }

    pub fn missing(&self) -> Vec<&'static str> {
        self.entries()
            .iter()
            .filter(|(_, filled)| !filled)
            .map(|(name, _)| *name)
            .collect()
    }

    pub fn all_filled(&self) -> bool {
        self.missing().is_empty()
    }
}

/// Result of a mono calibration: refined intrinsics, one board pose per view
/// (in the order the views were given), the reprojection error, aggregated
/// view coverage, and the accepted-step cost history of the optimizer.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub intrinsics: CameraIntrinsics,
    pub view_ids: Vec<u32>,
    pub view_poses: Vec<Pose>,
    pub rms_px: f64,
    pub coverage: CoverageBuckets,
    pub cost_history: Vec<f64>,
}

/// Result of a stereo calibration: the rig plus the jointly refined
/// board-to-left poses and the combined reprojection error over both cameras.
#[derive(Debug, Clone)]
pub struct StereoCalibration {
    pub rig: StereoRig,
    pub view_ids: Vec<u32>,
    pub left_poses: Vec<Pose>,
    pub rms_px: f64,
    pub cost_history: Vec<f64>,
}

/// Board inner corners in board coordinates, meters, row-major: corner `i`
/// sits at column `i % cols`, row `i / cols`, z = 0.
/// Axis-angle vector of a rotation matrix. Goes through a quaternion because
/// the direct matrix route takes acos of (trace-1)/2, which rounds past 1 for
/// rotations within machine epsilon of the identity and yields NaN; the
/// quaternion angle is atan2-based and stays finite everywhere.
pub(crate) fn rotation_vector(r: &Rotation3<f64>) -> Vector3<f64> {
    UnitQuaternion::from_rotation_matrix(r).scaled_axis()
}

pub fn board_points(board: &BoardModel) -> Vec<Vector3<f64>> {
    let mut pts = Vec::with_capacity(board.corner_count());
    for r in 0..board.rows {
        for c in 0..board.cols {
            pts.push(Vector3::new(
                c as f64 * board.square_size_m,
                r as f64 * board.square_size_m,
                0.0,
            ));
        }
    }
    pts
}
