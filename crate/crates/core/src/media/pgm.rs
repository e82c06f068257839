//! Binary PGM (P5) codec, 8-bit only.
//!
//! The header grammar is the netpbm one: `P5`, then width, height and maxval
//! as ASCII decimals separated by whitespace, with `#` comments allowed
//! between tokens, then a single whitespace byte, then the raster. We emit
//! the canonical form `P5\n<w> <h>\n255\n`.

use super::{FormatError, GrayImage};

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, FormatError> {
    if bytes.len() < 2 {
        return Err(FormatError::TruncatedData {
            needed: 2,
            have: bytes.len(),
        });
    }
    if &bytes[..2] != b"P5" {
        return Err(FormatError::BadMagic { expected: "P5" });
    }

    let mut pos = 2;
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::MaxvalUnsupported { maxval });
    }
    if width == 0 || height == 0 {
        return Err(FormatError::BadHeader {
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    let (width, height) = (width as u32, height as u32);

    // Exactly one whitespace byte separates the maxval from the raster, so
    // that raster bytes which happen to look like whitespace are not eaten.
    match bytes.get(pos) {
        Some(b' ' | b'\t' | b'\n' | b'\r') => pos += 1,
        Some(_) => {
            return Err(FormatError::BadHeader {
                reason: "missing whitespace after maxval".into(),
            })
        }
        None => {
            return Err(FormatError::TruncatedData {
                needed: pos + 1,
                have: bytes.len(),
            })
        }
    }

    let raster_len = width as u64 * height as u64;
    let available = (bytes.len() - pos) as u64;
    if available < raster_len {
        return Err(FormatError::TruncatedData {
            needed: pos + raster_len as usize,
            have: bytes.len(),
        });
    }
    if available > raster_len {
        return Err(FormatError::TrailingData {
            extra: (available - raster_len) as usize,
        });
    }
    GrayImage::new(width, height, bytes[pos..].to_vec())
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

/// Reads the next ASCII decimal from the header, skipping whitespace and
/// `#`-to-end-of-line comments before it.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<u64, FormatError> {
    loop {
        match bytes.get(*pos) {
            Some(b' ' | b'\t' | b'\n' | b'\r') => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => {
                return Err(FormatError::TruncatedData {
                    needed: *pos + 1,
                    have: bytes.len(),
                })
            }
        }
    }

    let start = *pos;
    let mut value: u64 = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .saturating_mul(10)
            .saturating_add(u64::from(b - b'0'));
        *pos += 1;
    }
    if *pos == start {
        return Err(FormatError::BadHeader {
            reason: format!("expected decimal at byte {start}"),
        });
    }
    Ok(value)
}
