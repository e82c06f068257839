//! Sum-of-absolute-differences block matching over rectified pairs.
//!
//! For every left pixel the kernel scans candidate disparities left-to-right
//! in the right image along the same row, keeps the cheapest window (ties to
//! the smallest disparity) and applies a uniqueness test: the win must beat
//! every non-adjacent runner-up by the configured ratio, otherwise the pixel
//! is ambiguous and dropped. Rows are independent, so they run in parallel;
//! the output is bit-identical to a sequential pass.

use rayon::prelude::*;

use super::{DisparityMap, MatchParams, StereoError};
use crate::media::GrayImage;

pub fn compute_disparity(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
) -> Result<DisparityMap, StereoError> {
    if left.width() != right.width() || left.height() != right.height() {
        return Err(StereoError::SizeMismatch {
            left_width: left.width(),
            left_height: left.height(),
            right_width: right.width(),
            right_height: right.height(),
        });
    }
    // Reject hand-rolled parameter structs that skip the constructor.
    MatchParams::new(
        params.window,
        params.d_min,
        params.d_max,
        params.uniqueness_ratio,
    )?;

    let width = left.width() as usize;
    let height = left.height() as usize;
    let half = (params.window / 2) as usize;

    let mut values = vec![f32::NAN; width * height];
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row_out)| {
            if y < half || y + half >= height {
                return;
            }
            match_row(left, right, params, half, y, row_out);
        });

    DisparityMap::from_values(left.width(), left.height(), values)
}

fn match_row(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
    half: usize,
    y: usize,
    row_out: &mut [f32],
) {
    let width = left.width() as usize;
    for x in half..width.saturating_sub(half) {
        // Candidate disparities whose right window stays inside the image.
        let d_hi = params.d_max.min((x - half) as u32);
        if d_hi < params.d_min {
            continue;
        }

        let mut best_d = 0u32;
        let mut best_cost = u32::MAX;
        let mut costs: Vec<u32> = Vec::with_capacity((d_hi - params.d_min + 1) as usize);
        for d in params.d_min..=d_hi {
            let cost = sad(left, right, x, y, d as usize, half);
            costs.push(cost);
            if cost < best_cost {
                best_cost = cost;
                best_d = d;
            }
        }

        // Runner-up over disparities not adjacent to the winner.
        let mut second = u32::MAX;
        for (i, &cost) in costs.iter().enumerate() {
            let d = params.d_min + i as u32;
            if d.abs_diff(best_d) > 1 && cost < second {
                second = cost;
            }
        }
        let unique =
            second != u32::MAX && (best_cost as f64) * params.uniqueness_ratio < second as f64;
        if unique {
            row_out[x] = best_d as f32;
        }
    }
}

/// Window cost between left (x, y) and right (x - d, y).
fn sad(left: &GrayImage, right: &GrayImage, x: usize, y: usize, d: usize, half: usize) -> u32 {
    let mut total = 0u32;
    for dy in 0..=2 * half {
        let row_l = left.row((y - half + dy) as u32);
        let row_r = right.row((y - half + dy) as u32);
        let lx = x - half;
        let rx = x - half - d;
        for k in 0..=2 * half {
            let a = row_l[lx + k];
            let b = row_r[rx + k];
            total += u32::from(a.abs_diff(b));
        }
    }
    total
}
