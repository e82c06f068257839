//! Planar homography by normalized direct linear transform.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};

use super::CalibError;

/// Estimates the homography mapping board-plane points (meters, z dropped)
/// to image points (pixels), minimizing algebraic error. Both point sets are
/// Hartley-normalized before the DLT solve and the result is scaled so the
/// bottom-right entry is 1.
pub fn estimate_homography(
    board_pts: &[Vector2<f64>],
    img_pts: &[Vector2<f64>],
) -> Result<Matrix3<f64>, CalibError> {
    if board_pts.len() != img_pts.len() {
        return Err(CalibError::DegenerateConfiguration {
            reason: format!(
                "{} board points vs {} image points",
                board_pts.len(),
                img_pts.len()
            ),
        });
    }
    if board_pts.len() < 4 {
        return Err(CalibError::DegenerateConfiguration {
            reason: format!("{} correspondences, need at least 4", board_pts.len()),
        });
    }

    let t_board = normalizing_transform(board_pts)?;
    let t_img = normalizing_transform(img_pts)?;

    let n = board_pts.len();
    let mut a = DMatrix::zeros(2 * n, 9);
    for (i, (bp, ip)) in board_pts.iter().zip(img_pts).enumerate() {
        let b = apply(&t_board, bp);
        let m = apply(&t_img, ip);
        let (x, y) = (b.x, b.y);
        let (u, v) = (m.x, m.y);
        let rows = [
            [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u],
            [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v],
        ];
        for (r, row) in rows.iter().enumerate() {
            for (c, val) in row.iter().enumerate() {
                a[(2 * i + r, c)] = *val;
            }
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (smallest, second, largest) = (order[0], order[1], *order.last().unwrap());
    // A second near-zero singular value means the null space is not unique:
    // the points are (near) collinear and any number of homographies fit.
    if sv[second] <= 1e-10 * sv[largest].max(1e-300) {
        return Err(CalibError::DegenerateConfiguration {
            reason: "correspondences are collinear or coincident".into(),
        });
    }

    let h = v_t.row(smallest);
    let h_norm = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_img_inv = t_img.try_inverse().ok_or_else(|| CalibError::DegenerateConfiguration {
        reason: "singular normalization".into(),
    })?;
    let h_full = t_img_inv * h_norm * t_board;
    let scale = h_full[(2, 2)];
    if scale.abs() < 1e-12 {
        return Err(CalibError::DegenerateConfiguration {
            reason: "homography maps the origin to infinity".into(),
        });
    }
    Ok(h_full / scale)
}

/// Similarity moving the points to centroid zero, mean distance sqrt(2).
fn normalizing_transform(pts: &[Vector2<f64>]) -> Result<Matrix3<f64>, CalibError> {
    let n = pts.len() as f64;
    let centroid = pts.iter().sum::<Vector2<f64>>() / n;
    let mean_dist = pts.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    if mean_dist < 1e-15 {
        return Err(CalibError::DegenerateConfiguration {
            reason: "all points coincide".into(),
        });
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(
        s,
        0.0,
        -s * centroid.x,
        0.0,
        s,
        -s * centroid.y,
        0.0,
        0.0,
        1.0,
    ))
}

fn apply(t: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    let q = t * Vector3::new(p.x, p.y, 1.0);
    Vector2::new(q.x / q.z, q.y / q.z)
}

/// Applies a homography to a 2D point.
#[cfg(test)]
pub(crate) fn apply_homography(h: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    apply(h, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for r in 0..4 {
            for c in 0..5 {
                pts.push(Vector2::new(c as f64 * 0.03, r as f64 * 0.03));
            }
        }
        pts
    }

    #[test]
    fn identity_mapping_recovers_identity() {
        let pts = grid();
        let h = estimate_homography(&pts, &pts).unwrap();
        assert_relative_eq!(h, Matrix3::identity(), epsilon = 1e-9);
    }

    #[test]
    fn pure_translation_recovered() {
        let pts = grid();
        let moved: Vec<_> = pts.iter().map(|p| p + Vector2::new(5.0, 3.0)).collect();
        let h = estimate_homography(&pts, &moved).unwrap();
        let expected = Matrix3::new(1.0, 0.0, 5.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(h, expected, epsilon = 1e-9);
    }

    #[test]
    fn known_homography_recovered_up_to_scale() {
        let truth = Matrix3::new(620.0, 14.0, 310.0, -9.0, 590.0, 255.0, 0.02, -0.015, 1.0);
        let pts = grid();
        let imgs: Vec<_> = pts.iter().map(|p| apply_homography(&truth, p)).collect();
        let h = estimate_homography(&pts, &imgs).unwrap();
        assert_relative_eq!(h, truth, max_relative = 1e-6);
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<_> = (0..6).map(|i| Vector2::new(i as f64, 2.0 * i as f64)).collect();
        let imgs: Vec<_> = pts.iter().map(|p| p + Vector2::new(1.0, 1.0)).collect();
        assert!(matches!(
            estimate_homography(&pts, &imgs),
            Err(CalibError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let pts = vec![Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
        assert!(estimate_homography(&pts, &pts).is_err());
    }
}
