//! Socket front ends. Plain TCP speaks length-prefixed frames; an HTTP
//! `GET /ws` on the same port upgrades to WebSocket text messages.

use std::io::{self, ErrorKind};
use std::net::{Shutdown, TcpStream};
use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::time::Duration;

use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::protocol::WebSocketConfig;

use crate::frame::{read_frame, write_frame, FrameError, MAX_FRAME};
use crate::hub::{Command, SessionId};
use crate::outbox::{Next, Outbox};
use crate::protocol::{ErrorCode, Message};

pub const WS_PATH: &str = "/ws";
const POLL: Duration = Duration::from_millis(2);

/// Wait until the first four bytes are readable (or the peer gives up).
fn sniff(stream: &TcpStream) -> io::Result<[u8; 4]> {
    let mut buf = [0u8; 4];
    for _ in 0..5000 {
        let n = stream.peek(&mut buf)?;
        if n == 4 {
            return Ok(buf);
        }
        if n == 0 {
            return Err(ErrorKind::UnexpectedEof.into());
        }
        std::thread::sleep(POLL);
    }
    Err(ErrorKind::TimedOut.into())
}

pub(crate) fn handle(stream: TcpStream, session: SessionId, hub: Sender<Command>) {
    let _ = stream.set_nodelay(true);
    let head = match sniff(&stream) {
        Ok(h) => h,
        Err(_) => return,
    };
    let outbox = Arc::new(Outbox::new());
    if hub.send(Command::Open { session, outbox: Arc::clone(&outbox) }).is_err() {
        return;
    }
    if &head == b"GET " {
        websocket(stream, session, &hub, &outbox);
    } else {
        framed(stream, session, &hub, outbox);
    }
    let _ = hub.send(Command::Close { session });
}

fn framed(stream: TcpStream, session: SessionId, hub: &Sender<Command>, outbox: Arc<Outbox>) {
    let Ok(mut out) = stream.try_clone() else { return };
    let writer_box = Arc::clone(&outbox);
    let writer = std::thread::spawn(move || {
        loop {
            match writer_box.next(Duration::from_millis(100)) {
                Next::Message(m) => {
                    if write_frame(&mut out, m.as_bytes()).is_err() {
                        break;
                    }
                }
                Next::Idle => {}
                Next::Closed => break,
            }
        }
        let _ = out.shutdown(Shutdown::Both);
    });
    let mut input = &stream;
    loop {
        match read_frame(&mut input) {
            Ok(Some(body)) => {
                if hub.send(Command::Frame { session, body }).is_err() {
                    break;
                }
            }
            Ok(None) => break,
            Err(FrameError::Oversize(n)) => {
                outbox.send(&Message::error(
                    0,
                    ErrorCode::OversizeFrame,
                    format!("frame of {n} bytes exceeds {MAX_FRAME}"),
                ));
                break;
            }
            Err(FrameError::Io(_)) => break,
        }
    }
    // the hub closes the outbox once it sees Close; the writer drains first
    let _ = hub.send(Command::Close { session });
    let _ = writer.join();
}

fn websocket(stream: TcpStream, session: SessionId, hub: &Sender<Command>, outbox: &Outbox) {
    let check_path = |req: &Request, resp: Response| -> Result<Response, ErrorResponse> {
        if req.uri().path() == WS_PATH {
            Ok(resp)
        } else {
            let mut err = ErrorResponse::new(Some(format!("websocket endpoint is {WS_PATH}")));
            *err.status_mut() = tungstenite::http::StatusCode::NOT_FOUND;
            Err(err)
        }
    };
    let mut config = WebSocketConfig::default();
    config.max_message_size = Some(MAX_FRAME);
    config.max_frame_size = Some(MAX_FRAME);
    let mut ws = match tungstenite::accept_hdr_with_config(stream, check_path, Some(config)) {
        Ok(ws) => ws,
        Err(e) => {
            log::debug!("websocket handshake failed: {e}");
            return;
        }
    };
    if ws.get_ref().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    'conn: loop {
        match ws.read() {
            Ok(tungstenite::Message::Text(t)) => {
                if hub.send(Command::Frame { session, body: t.into_bytes() }).is_err() {
                    break;
                }
            }
            Ok(tungstenite::Message::Binary(b)) => {
                if hub.send(Command::Frame { session, body: b }).is_err() {
                    break;
                }
            }
            Ok(tungstenite::Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::Capacity(e)) => {
                let msg = Message::error(0, ErrorCode::OversizeFrame, e.to_string());
                let _ = ws.send(tungstenite::Message::Text(msg.to_json()));
                let _ = ws.close(None);
                let _ = ws.flush();
                break;
            }
            Err(_) => break,
        }
        loop {
            match outbox.next(Duration::ZERO) {
                Next::Message(m) => {
                    if ws.send(tungstenite::Message::Text(m)).is_err() {
                        break 'conn;
                    }
                }
                Next::Idle => break,
                Next::Closed => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    break 'conn;
                }
            }
        }
    }
}
