//! Disparity and depth: dense block matching between rectified pairs, the
//! disparity-to-depth conversion, and mean distance over a detection box.

mod depth;
mod grid;
mod matching;

pub use depth::{depth_from_disparity, depth_map, object_distance};
pub use matching::compute_disparity;

pub(crate) use grid::FloatGrid;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StereoError {
    #[error("image sizes differ: left {left_width}x{left_height}, right {right_width}x{right_height}")]
    SizeMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },
    #[error("disparity {disparity} is not positive, depth undefined")]
    NonPositiveDisparity { disparity: f64 },
    #[error("no valid depth pixels in region")]
    NoValidDepth,
    #[error("box does not intersect the {width}x{height} image")]
    BoxOutsideImage { width: u32, height: u32 },
    #[error("bad match parameters: {reason}")]
    BadMatchParams { reason: String },
    #[error("bad bounding box: {reason}")]
    BadBBox { reason: String },
    #[error("grid dimensions {width}x{height} do not match {values} values")]
    GridDimensionMismatch {
        width: u32,
        height: u32,
        values: usize,
    },
}

/// Per-pixel disparity with an explicit validity mask.
///
/// Invalid pixels carry no value; accessors surface them as `None` and the
/// on-disk form stores them as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    grid: FloatGrid,
}

impl DisparityMap {
    /// Builds a map from row-major values, deriving the mask: finite values
    /// are valid, NaN and infinities are invalid.
    pub fn from_values(width: u32, height: u32, values: Vec<f32>) -> Result<Self, StereoError> {
        Ok(Self {
            grid: FloatGrid::from_values(width, height, values)?,
        })
    }

    pub fn width(&self) -> u32 {
        self.grid.width()
    }

    pub fn height(&self) -> u32 {
        self.grid.height()
    }

    /// Disparity at `(x, y)`, or `None` for invalid pixels.
    pub fn value(&self, x: u32, y: u32) -> Option<f32> {
        self.grid.at(x, y)
    }

    pub fn valid_count(&self) -> usize {
        self.grid.valid_count()
    }

    pub fn pixel_count(&self) -> usize {
        self.grid.len()
    }

    pub(crate) fn grid(&self) -> &FloatGrid {
        &self.grid
    }
}

/// Per-pixel depth in meters, mask inherited from the disparity map it was
/// derived from (minus pixels whose disparity was not positive).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    grid: FloatGrid,
}

impl DepthMap {
    /// Builds a map from row-major meters. Only finite, strictly positive
    /// values are valid; everything else becomes an invalid pixel.
    pub fn from_values(width: u32, height: u32, mut values: Vec<f32>) -> Result<Self, StereoError> {
        for v in &mut values {
            if !(*v > 0.0) {
                *v = f32::NAN;
            }
        }
        Ok(Self {
            grid: FloatGrid::from_values(width, height, values)?,
        })
    }

    pub fn width(&self) -> u32 {
        self.grid.width()
    }

    pub fn height(&self) -> u32 {
        self.grid.height()
    }

    /// Depth in meters at `(x, y)`, or `None` for invalid pixels.
    pub fn value(&self, x: u32, y: u32) -> Option<f32> {
        self.grid.at(x, y)
    }

    pub fn valid_count(&self) -> usize {
        self.grid.valid_count()
    }

    pub(crate) fn grid(&self) -> &FloatGrid {
        &self.grid
    }
}

/// Axis-aligned detection box. `x`/`y` may sit outside the image (detectors
/// clamp loosely at frame edges); boxes are clipped before any pixel math.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Result<Self, StereoError> {
        if w == 0 || h == 0 {
            return Err(StereoError::BadBBox {
                reason: format!("extent {w}x{h} must be at least 1x1"),
            });
        }
        Ok(Self { x, y, w, h })
    }

    /// Intersects the half-open region `[x, x+w) x [y, y+h)` with an image,
    /// returning inclusive-exclusive pixel ranges, or `None` when the box
    /// misses the image entirely.
    pub fn clip(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = (self.x + i64::from(self.w)).min(i64::from(width));
        let y1 = (self.y + i64::from(self.h)).min(i64::from(height));
        if x0 >= x1 || y0 >= y1 {
            return None;
        }
        Some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}

/// Block-matching knobs. `window` is the full side length of the square SAD
/// window and must be odd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub window: u32,
    pub d_min: u32,
    pub d_max: u32,
    pub uniqueness_ratio: f64,
}

impl MatchParams {
    pub fn new(window: u32, d_min: u32, d_max: u32, uniqueness_ratio: f64) -> Result<Self, StereoError> {
        if window < 3 || window % 2 == 0 {
            return Err(StereoError::BadMatchParams {
                reason: format!("window {window} must be odd and at least 3"),
            });
        }
        if d_min >= d_max {
            return Err(StereoError::BadMatchParams {
                reason: format!("need d_min < d_max, got [{d_min}, {d_max}]"),
            });
        }
        if !(uniqueness_ratio >= 1.0) {
            return Err(StereoError::BadMatchParams {
                reason: format!("uniqueness ratio {uniqueness_ratio} must be at least 1"),
            });
        }
        Ok(Self {
            window,
            d_min,
            d_max,
            uniqueness_ratio,
        })
    }
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            window: 9,
            d_min: 0,
            d_max: 64,
            uniqueness_ratio: 1.15,
        }
    }
}
