//! Control server: a JSON message protocol over length-prefixed TCP frames,
//! with the same messages over WebSocket at `/ws` on the same port.
//!
//! One thread runs the simulation. Connections feed it commands through a
//! channel and receive replies and pushes through their own outbox.

mod frame;
mod hub;
mod outbox;
pub mod protocol;
mod transport;

use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Sender};
use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

pub use frame::{encode, read_frame, write_frame, FrameError, MAX_FRAME};
pub use outbox::FCD_BUFFER;
pub use protocol::{ErrorCode, Message, PROTOCOL_VERSION};
pub use transport::WS_PATH;

use hub::{Command, Hub};
use outbox::{Next, Outbox};

pub const DEFAULT_PORT: u16 = 7077;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub scenarios_dir: PathBuf,
    /// Each loaded run is logged here when set.
    pub log_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(scenarios_dir: impl Into<PathBuf>) -> Self {
        Self { scenarios_dir: scenarios_dir.into(), log_dir: None }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot read scenario directory {path}: {source}")]
    Catalog { path: PathBuf, source: std::io::Error },
    #[error("cannot listen: {0}")]
    Bind(std::io::Error),
}

/// Handle on a running simulation loop.
#[derive(Clone)]
pub struct SimHandle {
    tx: Sender<Command>,
    next_session: Arc<AtomicU64>,
}

impl SimHandle {
    pub fn start(cfg: &ServerConfig) -> Result<Self, ServerError> {
        let catalog = hub::load_catalog(&cfg.scenarios_dir).map_err(|source| ServerError::Catalog {
            path: cfg.scenarios_dir.clone(),
            source,
        })?;
        log::info!("{} scenarios available", catalog.len());
        let (tx, rx) = mpsc::channel();
        let hub = Hub::new(cfg, catalog);
        std::thread::Builder::new()
            .name("sim".into())
            .spawn(move || hub.run(rx))
            .expect("spawn simulation thread");
        Ok(Self { tx, next_session: Arc::new(AtomicU64::new(1)) })
    }

    fn session_id(&self) -> u64 {
        self.next_session.fetch_add(1, Ordering::Relaxed)
    }

    /// In-process session without a socket.
    pub fn connect(&self) -> LocalSession {
        let id = self.session_id();
        let outbox = Arc::new(Outbox::new());
        let _ = self.tx.send(Command::Open { session: id, outbox: Arc::clone(&outbox) });
        LocalSession { id, tx: self.tx.clone(), outbox }
    }
}

/// A session driven directly through the command channel.
pub struct LocalSession {
    id: u64,
    tx: Sender<Command>,
    outbox: Arc<Outbox>,
}

impl LocalSession {
    pub fn send_raw(&self, body: impl Into<Vec<u8>>) {
        let _ = self.tx.send(Command::Frame { session: self.id, body: body.into() });
    }

    pub fn send(&self, msg: &Value) {
        self.send_raw(msg.to_string());
    }

    /// Next outgoing message, or `None` after `wait` or once closed.
    pub fn recv(&self, wait: Duration) -> Option<Value> {
        match self.outbox.next(wait) {
            Next::Message(m) => Some(serde_json::from_str(&m).expect("server emits JSON")),
            Next::Idle | Next::Closed => None,
        }
    }

    /// Send and return the reply with the same id; pushes seen meanwhile are
    /// appended to `pushes`.
    pub fn request(&self, msg: &Value, pushes: &mut Vec<Value>) -> Option<Value> {
        self.send(msg);
        let id = msg.get("id")?.clone();
        loop {
            let m = self.recv(Duration::from_secs(30))?;
            if m["id"] == id && m["id"] != 0 {
                return Some(m);
            }
            pushes.push(m);
        }
    }
}

impl Drop for LocalSession {
    fn drop(&mut self) {
        let _ = self.tx.send(Command::Close { session: self.id });
    }
}

pub struct Server {
    listener: TcpListener,
    sim: SimHandle,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, cfg: &ServerConfig) -> Result<Self, ServerError> {
        let listener = TcpListener::bind(addr).map_err(ServerError::Bind)?;
        Ok(Self { listener, sim: SimHandle::start(cfg)? })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn sim(&self) -> &SimHandle {
        &self.sim
    }

    /// Accept connections forever.
    pub fn run(self) {
        for stream in self.listener.incoming() {
            match stream {
                Ok(s) => {
                    let id = self.sim.session_id();
                    let tx = self.sim.tx.clone();
                    std::thread::spawn(move || transport::handle(s, id, tx));
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
    }

    /// Accept on a background thread; returns the bound address.
    pub fn spawn(self) -> SocketAddr {
        let addr = self.local_addr();
        std::thread::spawn(move || self.run());
        addr
    }
}

/// Bind and serve until the process ends.
pub fn serve(addr: &str, cfg: ServerConfig) -> Result<(), ServerError> {
    let server = Server::bind(addr, &cfg)?;
    log::info!("listening on {} (websocket at {WS_PATH})", server.local_addr());
    server.run();
    Ok(())
}
