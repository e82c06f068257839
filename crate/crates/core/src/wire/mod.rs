//! Framed message protocol between the perception server and the companion
//! client.
//!
//! Frames are tiny and bit-exact: magic "DRSH", a version byte, a kind byte,
//! a little-endian u16 payload length, then the payload. The link carries
//! object report batches one way (server to client), heartbeats so the
//! client can tell "no obstacles" from "dead link", and beeps for error
//! signaling. The transport is plain TCP standing in for an RFCOMM-style
//! byte stream.

mod codec;
mod net;

pub use codec::{decode_frame, encode_frame, Decoded};
pub use net::{receive, receive_stream, serve, serve_listener};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"DRSH";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 8;
pub const MAX_PAYLOAD: usize = 65_535;
pub const DEFAULT_PORT: u16 = 5321;

/// Wire value meaning "ranging failed, distance unknown".
pub const UNKNOWN_DISTANCE_MM: u32 = 0xFFFF_FFFF;

/// Bytes of one serialized object record inside a batch payload.
pub const OBJECT_RECORD_LEN: usize = 14;

/// Bytes of the batch payload before the object records.
pub const BATCH_HEADER_LEN: usize = 6;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("payload of {len} bytes exceeds the {MAX_PAYLOAD}-byte cap")]
    PayloadTooLarge { len: usize },
    #[error("bad magic, stream is not ours")]
    BadMagic,
    #[error("unknown protocol version {version:#04x}")]
    UnknownVersion { version: u8 },
    #[error("unknown frame kind {kind:#04x}")]
    UnknownKind { kind: u8 },
    #[error("batch payload of {actual} bytes should be {expected}")]
    PayloadLengthMismatch { expected: usize, actual: usize },
    #[error("could not bind endpoint")]
    BindFailure(#[source] std::io::Error),
    #[error("could not connect to server")]
    ConnectFailure(#[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameKind {
    ObjectReportBatch = 0x01,
    Heartbeat = 0x02,
    Beep = 0x03,
}

impl FrameKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0x01 => Some(Self::ObjectReportBatch),
            0x02 => Some(Self::Heartbeat),
            0x03 => Some(Self::Beep),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireFrame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

impl WireFrame {
    pub fn heartbeat() -> Self {
        Self {
            kind: FrameKind::Heartbeat,
            payload: Vec::new(),
        }
    }

    pub fn beep() -> Self {
        Self {
            kind: FrameKind::Beep,
            payload: Vec::new(),
        }
    }

    pub fn batch(batch: &ReportBatchPayload) -> Self {
        Self {
            kind: FrameKind::ObjectReportBatch,
            payload: batch.encode(),
        }
    }
}

/// One object inside a report batch, in wire units: millimeters and pixel
/// coordinates, all unsigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireObject {
    pub label_id: u16,
    pub distance_mm: u32,
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
}

impl WireObject {
    /// Distance back in meters; `None` for the unknown-distance sentinel.
    pub fn distance_m(&self) -> Option<f64> {
        (self.distance_mm != UNKNOWN_DISTANCE_MM).then(|| f64::from(self.distance_mm) / 1000.0)
    }

    /// Millimeter wire encoding of a measured distance. Values that would
    /// collide with the unknown sentinel saturate one step below it.
    pub fn encode_distance(distance_m: Option<f64>) -> u32 {
        match distance_m {
            Some(d) if d.is_finite() && d >= 0.0 => {
                let mm = (d * 1000.0).round();
                if mm >= f64::from(UNKNOWN_DISTANCE_MM) {
                    UNKNOWN_DISTANCE_MM - 1
                } else {
                    mm as u32
                }
            }
            _ => UNKNOWN_DISTANCE_MM,
        }
    }
}

/// Payload of an `ObjectReportBatch` frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportBatchPayload {
    pub frame_id: u32,
    pub objects: Vec<WireObject>,
}

impl ReportBatchPayload {
    /// Serialized form: frame_id u32, count u16, then 14 bytes per object
    /// (label_id u16, distance_mm u32, x, y, w, h u16 each), little-endian
    /// throughout.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BATCH_HEADER_LEN + OBJECT_RECORD_LEN * self.objects.len());
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.extend_from_slice(&(self.objects.len() as u16).to_le_bytes());
        for obj in &self.objects {
            out.extend_from_slice(&obj.label_id.to_le_bytes());
            out.extend_from_slice(&obj.distance_mm.to_le_bytes());
            out.extend_from_slice(&obj.x.to_le_bytes());
            out.extend_from_slice(&obj.y.to_le_bytes());
            out.extend_from_slice(&obj.w.to_le_bytes());
            out.extend_from_slice(&obj.h.to_le_bytes());
        }
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self, WireError> {
        if payload.len() < BATCH_HEADER_LEN {
            return Err(WireError::PayloadLengthMismatch {
                expected: BATCH_HEADER_LEN,
                actual: payload.len(),
            });
        }
        let frame_id = u32::from_le_bytes(payload[0..4].try_into().unwrap());
        let count = u16::from_le_bytes(payload[4..6].try_into().unwrap()) as usize;
        let expected = BATCH_HEADER_LEN + OBJECT_RECORD_LEN * count;
        if payload.len() != expected {
            return Err(WireError::PayloadLengthMismatch {
                expected,
                actual: payload.len(),
            });
        }
        let mut objects = Vec::with_capacity(count);
        for chunk in payload[BATCH_HEADER_LEN..].chunks_exact(OBJECT_RECORD_LEN) {
            objects.push(WireObject {
                label_id: u16::from_le_bytes(chunk[0..2].try_into().unwrap()),
                distance_mm: u32::from_le_bytes(chunk[2..6].try_into().unwrap()),
                x: u16::from_le_bytes(chunk[6..8].try_into().unwrap()),
                y: u16::from_le_bytes(chunk[8..10].try_into().unwrap()),
                w: u16::from_le_bytes(chunk[10..12].try_into().unwrap()),
                h: u16::from_le_bytes(chunk[12..14].try_into().unwrap()),
            });
        }
        Ok(Self { frame_id, objects })
    }
}
