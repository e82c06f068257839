//! Shared storage for disparity and depth maps: row-major f32 values plus a
//! validity mask. Invalid slots are normalized to NaN so the in-memory and
//! on-disk forms agree byte-for-byte.

use super::StereoError;

#[derive(Debug, Clone)]
pub(crate) struct FloatGrid {
    width: u32,
    height: u32,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl FloatGrid {
    pub fn from_values(width: u32, height: u32, mut values: Vec<f32>) -> Result<Self, StereoError> {
        if width == 0 || height == 0 || values.len() as u64 != width as u64 * height as u64 {
            return Err(StereoError::GridDimensionMismatch {
                width,
                height,
                values: values.len(),
            });
        }
        let valid = values
            .iter_mut()
            .map(|v| {
                if v.is_finite() {
                    true
                } else {
                    *v = f32::NAN;
                    false
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        y as usize * self.width as usize + x as usize
    }

    pub fn at(&self, x: u32, y: u32) -> Option<f32> {
        let i = self.index(x, y);
        self.valid[i].then(|| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Raw row-major values with NaN in invalid slots, as written to disk.
    pub fn raw_values(&self) -> &[f32] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f32>> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .map(|(v, ok)| ok.then_some(*v))
    }
}

// NaN slots defeat a derived PartialEq; compare the mask and only the valid
// values.
impl PartialEq for FloatGrid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.valid == other.valid
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.valid)
                .all(|((a, b), ok)| !ok || a == b)
    }
}
