//! Frame encode/decode. The decoder is streaming-tolerant: fed a prefix of
//! a valid stream it asks for more bytes, fed anything else it returns a
//! typed error, and it never panics on arbitrary input.

use super::{
    FrameKind, ReportBatchPayload, WireError, WireFrame, HEADER_LEN, MAGIC, MAX_PAYLOAD, VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    /// Buffer holds only part of a frame; retry with more data.
    NeedMoreBytes,
    /// One whole frame plus how many buffer bytes it occupied.
    Frame { frame: WireFrame, consumed: usize },
}

pub fn encode_frame(frame: &WireFrame) -> Result<Vec<u8>, WireError> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge {
            len: frame.payload.len(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + frame.payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.kind.code());
    out.extend_from_slice(&(frame.payload.len() as u16).to_le_bytes());
    out.extend_from_slice(&frame.payload);
    Ok(out)
}

/// Decodes the frame at the start of `buf`.
///
/// Corruption is reported as soon as it is visible: a magic mismatch errors
/// even before four bytes have arrived, so a desynchronized connection dies
/// fast instead of waiting for a full bogus header.
pub fn decode_frame(buf: &[u8]) -> Result<Decoded, WireError> {
    let probe = buf.len().min(MAGIC.len());
    if buf[..probe] != MAGIC[..probe] {
        return Err(WireError::BadMagic);
    }
    if buf.len() < HEADER_LEN {
        return Ok(Decoded::NeedMoreBytes);
    }
    let version = buf[4];
    if version != VERSION {
        return Err(WireError::UnknownVersion { version });
    }
    let kind = FrameKind::from_code(buf[5]).ok_or(WireError::UnknownKind { kind: buf[5] })?;
    let payload_len = u16::from_le_bytes([buf[6], buf[7]]) as usize;
    let total = HEADER_LEN + payload_len;
    if buf.len() < total {
        return Ok(Decoded::NeedMoreBytes);
    }
    let payload = buf[HEADER_LEN..total].to_vec();
    if kind == FrameKind::ObjectReportBatch {
        // Validate the batch shape now; a malformed batch poisons the
        // connection rather than surfacing later at payload-parse time.
        ReportBatchPayload::decode(&payload)?;
    }
    Ok(Decoded::Frame {
        frame: WireFrame { kind, payload },
        consumed: total,
    })
}
