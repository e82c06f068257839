//! View coverage classification.
//!
//! A good calibration sweep shows the board at the image edges, at strong
//! skews, filling the frame, far away, and tilted about both image axes.
//! Each view is bucketed here; the calibration report ORs the buckets over
//! all views and the CLI warns about the ones never hit.

use nalgebra::{Vector2, Vector3};

use super::{CoverageBuckets, Pose};

/// Fraction of width/height forming the edge bands.
const EDGE_BAND: f64 = 0.2;
/// Board-normal angle from the optical axis that counts as skew, degrees.
const SKEW_LIMIT_DEG: f64 = 15.0;
/// Projected board diagonal over image diagonal that counts as filling.
const FILL_RATIO: f64 = 0.7;
/// Below this diagonal ratio the view counts as a far capture.
const FAR_RATIO: f64 = 0.25;
/// Per-axis normal tilt that counts toward overall tilt, degrees.
const TILT_LIMIT_DEG: f64 = 10.0;

/// Buckets one view: observed corners drive the position and size tests,
/// the recovered pose drives the angle tests. Corner order does not matter.
pub fn classify_coverage(
    corners: &[Vector2<f64>],
    pose: &Pose,
    image_size: (u32, u32),
) -> CoverageBuckets {
    assert!(!corners.is_empty(), "coverage of an empty corner list");
    let (width, height) = (f64::from(image_size.0), f64::from(image_size.1));

    // Sort before summing so the centroid is bit-identical under corner
    // permutations.
    let mut ordered: Vec<&Vector2<f64>> = corners.iter().collect();
    ordered.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut centroid = Vector2::zeros();
    for c in &ordered {
        centroid += **c;
    }
    centroid /= corners.len() as f64;

    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in corners {
        min_u = min_u.min(c.x);
        max_u = max_u.max(c.x);
        min_v = min_v.min(c.y);
        max_v = max_v.max(c.y);
    }
    let span = ((max_u - min_u).powi(2) + (max_v - min_v).powi(2)).sqrt();
    let image_diag = (width * width + height * height).sqrt();
    let ratio = span / image_diag;

    let normal = pose.rotation_matrix() * Vector3::new(0.0, 0.0, 1.0);
    let nz = normal.z.abs();
    let total_deg = normal.xy().norm().atan2(nz).to_degrees();
    let tilt_x_deg = normal.y.abs().atan2(nz).to_degrees();
    let tilt_y_deg = normal.x.abs().atan2(nz).to_degrees();

    CoverageBuckets {
        x_left: centroid.x < EDGE_BAND * width,
        x_right: centroid.x > (1.0 - EDGE_BAND) * width,
        y_top: centroid.y < EDGE_BAND * height,
        y_bottom: centroid.y > (1.0 - EDGE_BAND) * height,
        skew: total_deg > SKEW_LIMIT_DEG,
        size_fill: ratio >= FILL_RATIO,
        size_far: ratio < FAR_RATIO,
        overall_tilt: tilt_x_deg > TILT_LIMIT_DEG || tilt_y_deg > TILT_LIMIT_DEG,
    }
}
