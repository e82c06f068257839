//! TCP transport: a push-only server and a receive-only client.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::Duration;

use super::{decode_frame, encode_frame, Decoded, ReportBatchPayload, WireError, WireFrame};

/// Idle gap after which the server emits a heartbeat.
pub const HEARTBEAT_INTERVAL: Duration = Duration::from_secs(1);

/// Binds `endpoint` and serves until the batch stream ends.
pub fn serve(endpoint: &str, batches: Receiver<ReportBatchPayload>) -> Result<(), WireError> {
    let listener = TcpListener::bind(endpoint).map_err(WireError::BindFailure)?;
    serve_listener(listener, batches)
}

/// Serves one client at a time from an already-bound listener (callers that
/// bind port 0 can read the real address back before serving).
///
/// Each queued batch is pushed in order; a heartbeat goes out after every
/// idle second. The server never reads from the client. When a client drops,
/// the loop returns to accepting; when the batch stream disconnects, the
/// server is done. A batch in flight during a client drop is lost, which is
/// fine for this link: reports describe the current frame and are stale by
/// the time a client reconnects.
pub fn serve_listener(
    listener: TcpListener,
    batches: Receiver<ReportBatchPayload>,
) -> Result<(), WireError> {
    loop {
        let Ok((mut stream, _)) = listener.accept() else {
            // Listener torn down under us; nothing left to serve.
            return Ok(());
        };
        let _ = stream.set_nodelay(true);
        loop {
            let frame = match batches.recv_timeout(HEARTBEAT_INTERVAL) {
                Ok(batch) => WireFrame::batch(&batch),
                Err(RecvTimeoutError::Timeout) => WireFrame::heartbeat(),
                Err(RecvTimeoutError::Disconnected) => return Ok(()),
            };
            let bytes = encode_frame(&frame)?;
            if stream.write_all(&bytes).is_err() {
                break;
            }
        }
    }
}

/// Connects to a server and hands every decoded frame to `handler` until the
/// link ends.
pub fn receive(endpoint: &str, handler: impl FnMut(WireFrame)) -> Result<(), WireError> {
    let stream = TcpStream::connect(endpoint).map_err(WireError::ConnectFailure)?;
    let _ = stream.set_nodelay(true);
    receive_stream(stream, handler)
}

/// Frame pump over any byte stream.
///
/// Frames are delivered in arrival order. A broken link (read error, EOF
/// inside a frame) or a corrupt stream surfaces one locally-generated beep
/// to the handler and ends the pump; EOF on a frame boundary is a clean
/// shutdown. The pump never writes.
pub fn receive_stream<R: Read>(
    mut reader: R,
    mut handler: impl FnMut(WireFrame),
) -> Result<(), WireError> {
    let mut buf: Vec<u8> = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        loop {
            match decode_frame(&buf) {
                Ok(Decoded::Frame { frame, consumed }) => {
                    handler(frame);
                    buf.drain(..consumed);
                }
                Ok(Decoded::NeedMoreBytes) => break,
                Err(_) => {
                    handler(WireFrame::beep());
                    return Ok(());
                }
            }
        }
        match reader.read(&mut chunk) {
            Ok(0) => {
                if !buf.is_empty() {
                    handler(WireFrame::beep());
                }
                return Ok(());
            }
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => {
                handler(WireFrame::beep());
                return Ok(());
            }
        }
    }
}
