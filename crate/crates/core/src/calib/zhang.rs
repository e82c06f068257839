//! Closed-form intrinsics initialization from planar homographies, via the
//! image of the absolute conic. Output feeds the nonlinear refinement; it is
//! never the final answer.

use nalgebra::{DMatrix, Matrix3};

use super::{CalibError, CameraIntrinsics};

const CONDITION_LIMIT: f64 = 1e10;

/// Recovers pinhole intrinsics from at least three homographies of the same
/// plane under distinct tilts. `pixel_size_mm` is attached as metadata, it
/// does not influence the estimate.
///
/// The skew entry of the conic solution is computed but dropped: the camera
/// model is zero-skew, and for real boards the recovered skew is noise.
pub fn init_intrinsics(
    homographies: &[Matrix3<f64>],
    pixel_size_mm: f64,
) -> Result<CameraIntrinsics, CalibError> {
    if homographies.len() < 3 {
        return Err(CalibError::InsufficientViews {
            got: homographies.len(),
            need: 3,
        });
    }

    let n = homographies.len();
    let mut v = DMatrix::zeros(2 * n, 6);
    for (k, h) in homographies.iter().enumerate() {
        let v01 = conic_row(h, 0, 1);
        let v00 = conic_row(h, 0, 0);
        let v11 = conic_row(h, 1, 1);
        for c in 0..6 {
            v[(2 * k, c)] = v01[c];
            v[(2 * k + 1, c)] = v00[c] - v11[c];
        }
    }

    // A structurally zero column (exactly fronto-parallel analytic input)
    // never carries a constraint; bail before the SVD has to decide.
    for c in 0..6 {
        if v.column(c).norm() <= 0.0 {
            return Err(CalibError::IllConditioned {
                condition: f64::INFINITY,
            });
        }
    }

    let svd = v.svd(false, true);
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let smallest = order[0];
    // The smallest singular direction IS the solution of the homogeneous
    // system (near zero for clean data by construction), so degeneracy is
    // measured one rank up: view sets without tilt variety collapse the
    // second-smallest singular value as the nullspace gains dimensions.
    //
    // The singular values are deliberately left in pixel units. Healthy
    // geometry at consumer focal lengths spreads them over roughly seven
    // orders (the quadratic columns scale with focal^2, the constant column
    // with tilt^2), while degenerate sets leave nothing above the rounding
    // floor of the homography estimate, around ten orders further down. The
    // limit sits between those regimes. Rescaling columns to hide the unit
    // spread would amplify noise-only columns into fake rank and mask exactly
    // the failure this check exists to catch.
    let condition = sv[*order.last().unwrap()] / sv[order[1]].max(f64::MIN_POSITIVE);
    if condition > CONDITION_LIMIT {
        return Err(CalibError::IllConditioned { condition });
    }

    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut b = [0.0f64; 6];
    for c in 0..6 {
        b[c] = v_t[(smallest, c)];
    }
    // The conic matrix is positive definite up to the sign of b.
    if b[0] < 0.0 {
        for x in &mut b {
            *x = -*x;
        }
    }

    let denom = b[0] * b[2] - b[1] * b[1];
    let v0 = (b[1] * b[3] - b[0] * b[4]) / denom;
    let lambda = b[5] - (b[3] * b[3] + v0 * (b[1] * b[3] - b[0] * b[4])) / b[0];
    let alpha_sq = lambda / b[0];
    let beta_sq = lambda * b[0] / denom;
    if !(alpha_sq > 0.0) || !(beta_sq > 0.0) || !alpha_sq.is_finite() || !beta_sq.is_finite() {
        return Err(CalibError::IllConditioned { condition });
    }
    let alpha = alpha_sq.sqrt();
    let beta = beta_sq.sqrt();
    let gamma = -b[1] * alpha_sq * beta / lambda;
    let u0 = gamma * v0 / beta - b[3] * alpha_sq / lambda;

    if !u0.is_finite() || !v0.is_finite() {
        return Err(CalibError::IllConditioned { condition });
    }
    CameraIntrinsics::new(alpha, beta, u0, v0, pixel_size_mm)
}

/// Row of the absolute-conic constraint system for columns i, j of H.
fn conic_row(h: &Matrix3<f64>, i: usize, j: usize) -> [f64; 6] {
    let (a0, a1, a2) = (h[(0, i)], h[(1, i)], h[(2, i)]);
    let (b0, b1, b2) = (h[(0, j)], h[(1, j)], h[(2, j)]);
    [
        a0 * b0,
        a0 * b1 + a1 * b0,
        a1 * b1,
        a2 * b0 + a0 * b2,
        a2 * b1 + a1 * b2,
        a2 * b2,
    ]
}
