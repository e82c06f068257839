//! Disparity-to-depth conversion and per-object ranging.

use super::{BBox, DepthMap, DisparityMap, StereoError};
use crate::calib::StereoRig;

/// Depth in meters for a single disparity in pixels.
///
/// Standard rectified-pair triangulation: depth = baseline * fx / disparity,
/// with fx taken from the left camera. Disparity must be strictly positive;
/// zero means the point is at infinity.
pub fn depth_from_disparity(disparity: f64, rig: &StereoRig) -> Result<f64, StereoError> {
    if !(disparity > 0.0) {
        return Err(StereoError::NonPositiveDisparity { disparity });
    }
    Ok(rig.baseline() * rig.left.fx / disparity)
}

/// Converts a whole disparity map. The validity mask carries over, minus
/// pixels whose disparity is not strictly positive.
pub fn depth_map(disparity: &DisparityMap, rig: &StereoRig) -> DepthMap {
    let factor = rig.baseline() * rig.left.fx;
    let values = disparity
        .grid()
        .iter()
        .map(|v| match v {
            Some(d) if d > 0.0 => (factor / f64::from(d)) as f32,
            _ => f32::NAN,
        })
        .collect();
    DepthMap::from_values(disparity.width(), disparity.height(), values)
        .expect("dimensions come from a valid map")
}

/// Mean depth over the valid pixels under a detection box.
///
/// The box is clipped to the image first; a box that misses the image
/// entirely and a box covering only invalid pixels are distinct errors so
/// callers can tell bad detector output from a ranging dropout.
pub fn object_distance(depth: &DepthMap, bbox: &BBox) -> Result<f64, StereoError> {
    let (x0, y0, x1, y1) = bbox
        .clip(depth.width(), depth.height())
        .ok_or(StereoError::BoxOutsideImage {
            width: depth.width(),
            height: depth.height(),
        })?;
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for y in y0..y1 {
        for x in x0..x1 {
            if let Some(v) = depth.value(x, y) {
                sum += f64::from(v);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(StereoError::NoValidDepth);
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::CameraIntrinsics;
    use nalgebra::Vector3;

    fn rig(baseline_m: f64, focal_mm: f64, pixel_size_mm: f64) -> StereoRig {
        let cam = CameraIntrinsics::new(
            focal_mm / pixel_size_mm,
            focal_mm / pixel_size_mm,
            320.0,
            240.0,
            pixel_size_mm,
        )
        .unwrap();
        StereoRig {
            left: cam.clone(),
            right: cam,
            relative_rotation: Vector3::zeros(),
            baseline_vector: Vector3::new(baseline_m, 0.0, 0.0),
        }
    }

    #[test]
    fn textbook_triangulation() {
        // 100 mm baseline, 2 mm lens on 3 um cells: fx = 666.67 px, so a
        // 50 px disparity puts the point at 1.333 m.
        let r = rig(0.1, 2.0, 0.003);
        let d = depth_from_disparity(50.0, &r).unwrap();
        assert!((d - 0.1 * (2.0 / 0.003) / 50.0).abs() < 1e-12);
        assert!((d - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn depth_scales_with_baseline_and_focal() {
        let base = depth_from_disparity(10.0, &rig(0.06, 2.0, 0.003)).unwrap();
        let wide = depth_from_disparity(10.0, &rig(0.12, 2.0, 0.003)).unwrap();
        assert!((wide / base - 2.0).abs() < 1e-12);
        // Coarser pixels at the same lens shrink fx and depth alike.
        let coarse = depth_from_disparity(10.0, &rig(0.06, 2.0, 0.006)).unwrap();
        assert!((coarse / base - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_positive_disparity_is_an_error() {
        let r = rig(0.06, 2.0, 0.003);
        assert!(matches!(
            depth_from_disparity(0.0, &r),
            Err(StereoError::NonPositiveDisparity { .. })
        ));
        assert!(matches!(
            depth_from_disparity(-3.0, &r),
            Err(StereoError::NonPositiveDisparity { .. })
        ));
    }

    #[test]
    fn map_conversion_preserves_mask_and_drops_zeros() {
        let disp =
            DisparityMap::from_values(2, 2, vec![10.0, f32::NAN, 0.0, 20.0]).unwrap();
        let r = rig(0.06, 2.0, 0.003);
        let depth = depth_map(&disp, &r);
        assert_eq!(depth.valid_count(), 2);
        let expect = |d: f64| (r.baseline() * r.left.fx / d) as f32;
        assert_eq!(depth.value(0, 0), Some(expect(10.0)));
        assert_eq!(depth.value(1, 0), None);
        assert_eq!(depth.value(0, 1), None);
        assert_eq!(depth.value(1, 1), Some(expect(20.0)));
    }

    #[test]
    fn object_distance_means_valid_pixels_only() {
        let depth = DepthMap::from_values(2, 2, vec![2.0, 4.0, f32::NAN, 6.0]).unwrap();
        let b = BBox::new(0, 0, 2, 2).unwrap();
        assert_eq!(object_distance(&depth, &b).unwrap(), 4.0);
    }

    #[test]
    fn object_distance_distinguishes_miss_from_dropout() {
        let depth = DepthMap::from_values(2, 2, vec![f32::NAN; 4]).unwrap();
        let miss = BBox::new(10, 10, 2, 2).unwrap();
        assert!(matches!(
            object_distance(&depth, &miss),
            Err(StereoError::BoxOutsideImage { width: 2, height: 2 })
        ));
        let inside = BBox::new(0, 0, 2, 2).unwrap();
        assert!(matches!(
            object_distance(&depth, &inside),
            Err(StereoError::NoValidDepth)
        ));
    }
}
