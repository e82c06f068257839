//! DSP1: a minimal container for float grids.
//!
//! Layout: magic `DSP1`, width u32-LE, height u32-LE, then width*height
//! float32-LE values row-major. NaN marks an invalid pixel. Disparity maps
//! and depth maps share the container; the payload unit (pixels vs meters)
//! is whatever the producing stage wrote.

use super::FormatError;
use crate::stereo::{DepthMap, DisparityMap, FloatGrid};

const MAGIC: &[u8; 4] = b"DSP1";
const HEADER_LEN: usize = 12;

pub fn decode_dispmap(bytes: &[u8]) -> Result<DisparityMap, FormatError> {
    let (width, height, values) = decode_grid(bytes)?;
    DisparityMap::from_values(width, height, values).map_err(|_| FormatError::BadHeader {
        reason: format!("bad grid dimensions {width}x{height}"),
    })
}

pub fn encode_dispmap(map: &DisparityMap) -> Vec<u8> {
    encode_grid(map.grid())
}

pub fn decode_depthmap(bytes: &[u8]) -> Result<DepthMap, FormatError> {
    let (width, height, values) = decode_grid(bytes)?;
    DepthMap::from_values(width, height, values).map_err(|_| FormatError::BadHeader {
        reason: format!("bad grid dimensions {width}x{height}"),
    })
}

pub fn encode_depthmap(map: &DepthMap) -> Vec<u8> {
    encode_grid(map.grid())
}

fn decode_grid(bytes: &[u8]) -> Result<(u32, u32, Vec<f32>), FormatError> {
    if bytes.len() < MAGIC.len() {
        return Err(FormatError::TruncatedData {
            needed: MAGIC.len(),
            have: bytes.len(),
        });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic { expected: "DSP1" });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedData {
            needed: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width == 0 || height == 0 {
        return Err(FormatError::BadHeader {
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    let expected = HEADER_LEN as u64 + width as u64 * height as u64 * 4;
    if bytes.len() as u64 != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, values))
}

fn encode_grid(grid: &FloatGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&grid.width().to_le_bytes());
    out.extend_from_slice(&grid.height().to_le_bytes());
    for v in grid.raw_values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
