#![allow(dead_code)]

use std::io::Write;
use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use precrash_server::{read_frame, write_frame, Server, ServerConfig};
use serde_json::{json, Value};

pub fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

pub fn start() -> SocketAddr {
    start_with(ServerConfig::new(fixtures().join("scenarios")))
}

pub fn start_with(cfg: ServerConfig) -> SocketAddr {
    Server::bind("127.0.0.1:0", &cfg).unwrap().spawn()
}

pub trait Client {
    fn send_text(&mut self, body: &str);
    /// Next message, or `None` on timeout or close.
    fn recv(&mut self) -> Option<Value>;

    fn send(&mut self, msg: Value) {
        self.send_text(&msg.to_string());
    }

    /// Send a request and collect everything up to and including its reply.
    fn exchange(&mut self, msg: Value) -> Vec<Value> {
        let id = msg["id"].clone();
        self.send(msg);
        let mut seen = Vec::new();
        while let Some(m) = self.recv() {
            let done = m["id"] == id && m["type"] != "fcd_frame" && m["type"] != "event";
            seen.push(m);
            if done {
                return seen;
            }
        }
        panic!("no reply for request {id}; saw {seen:?}");
    }

    fn call(&mut self, msg: Value) -> Value {
        self.exchange(msg).pop().unwrap()
    }

    fn hello(&mut self) -> Value {
        self.call(json!({"id": 1, "type": "hello", "payload": {"version": "1.0"}}))
    }
}

pub struct Tcp(pub TcpStream);

impl Tcp {
    pub fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
        s.set_nodelay(true).unwrap();
        Tcp(s)
    }

    pub fn write_raw(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.0.write_all(bytes)
    }
}

impl Client for Tcp {
    fn send_text(&mut self, body: &str) {
        write_frame(&mut self.0, body.as_bytes()).unwrap();
    }

    fn recv(&mut self) -> Option<Value> {
        let body = read_frame(&mut self.0).ok()??;
        Some(serde_json::from_slice(&body).unwrap())
    }
}

pub struct Ws(pub tungstenite::WebSocket<TcpStream>);

impl Ws {
    pub fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
        let (ws, _) = tungstenite::client(format!("ws://{addr}/ws"), s).unwrap();
        Ws(ws)
    }
}

impl Client for Ws {
    fn send_text(&mut self, body: &str) {
        self.0.send(tungstenite::Message::Text(body.to_string())).unwrap();
    }

    fn recv(&mut self) -> Option<Value> {
        loop {
            match self.0.read().ok()? {
                tungstenite::Message::Text(t) => return Some(serde_json::from_str(&t).unwrap()),
                tungstenite::Message::Close(_) => return None,
                _ => {}
            }
        }
    }
}
