//! File formats the pipeline reads and writes.
//!
//! Four families: binary PGM grayscale images, the DSP1 float container for
//! disparity and depth grids, and line-oriented CSV for checkerboard corners,
//! detection annotations, label maps. Everything here is a pure function over
//! byte slices or strings; callers own file IO.

mod annotations;
mod corners;
mod dsp;
mod pgm;

pub use annotations::{load_label_map, parse_annotation_csv, AnnotationSet, LabelMap};
pub use corners::{
    format_corner_csv, parse_corner_csv, BoardModel, CameraId, CornerObservationSet,
    ViewObservation,
};
pub use dsp::{decode_depthmap, decode_dispmap, encode_depthmap, encode_dispmap};
pub use pgm::{decode_pgm, encode_pgm};

use thiserror::Error;

/// Parse or validation failure for any of the on-disk formats.
///
/// Every text-format error carries the 1-based line number of the offending
/// line so fixtures can be fixed by hand.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic, expected {expected}")]
    BadMagic { expected: &'static str },
    #[error("truncated data: need {needed} bytes, have {have}")]
    TruncatedData { needed: usize, have: usize },
    #[error("unsupported maxval {maxval}, only 8-bit data up to 255")]
    MaxvalUnsupported { maxval: u64 },
    #[error("{extra} trailing bytes after raster")]
    TrailingData { extra: usize },
    #[error("bad header: {reason}")]
    BadHeader { reason: String },
    #[error("payload size mismatch: header implies {expected} bytes total, have {actual}")]
    SizeMismatch { expected: u64, actual: usize },
    #[error("image dimensions {width}x{height} do not match {pixels} pixels")]
    DimensionMismatch {
        width: u32,
        height: u32,
        pixels: usize,
    },
    #[error("line 1: expected board header line \"board,<cols>,<rows>,<square_size_m>\"")]
    MissingBoardHeader,
    #[error("line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("line {line}: non-finite coordinate")]
    NonFiniteCoordinate { line: usize },
    #[error("view {view_id} camera {camera}: {got} of {expected} corners present")]
    IncompleteView {
        view_id: u32,
        camera: CameraId,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: duplicate corner {index} for view {view_id}")]
    DuplicateCorner {
        line: usize,
        view_id: u32,
        index: usize,
    },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: bad bounding box: {reason}")]
    BadBBox { line: usize, reason: String },
    #[error("line {line}: confidence {value} outside [0, 1]")]
    BadConfidence { line: usize, value: f64 },
    #[error("line {line}: duplicate label id {id}")]
    DuplicateLabelId { line: usize, id: u16 },
    #[error("line {line}: duplicate label name {label:?}")]
    DuplicateLabelName { line: usize, label: String },
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Wraps a pixel buffer, checking that it matches the stated dimensions
    /// and that neither dimension is zero.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FormatError> {
        if width == 0 || height == 0 || pixels.len() as u64 != width as u64 * height as u64 {
            return Err(FormatError::DimensionMismatch {
                width,
                height,
                pixels: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Intensity at `(x, y)`. Panics outside the image, like slice indexing.
    pub fn get(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// One image row as a slice.
    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.pixels[start..start + w]
    }
}
