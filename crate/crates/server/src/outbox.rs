//! Per-session outgoing queue. Replies and events are never dropped; fcd
//! frames are capped and the oldest are discarded first.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use crate::protocol::Message;

pub const FCD_BUFFER: usize = 256;

#[derive(Debug)]
enum Item {
    Text(String),
    Fcd(Message),
}

#[derive(Debug, Default)]
struct State {
    items: VecDeque<Item>,
    fcd_queued: usize,
    dropped: u64,
    closed: bool,
}

#[derive(Debug, Default)]
pub struct Outbox {
    state: Mutex<State>,
    ready: Condvar,
}

#[derive(Debug, PartialEq)]
pub enum Next {
    Message(String),
    Closed,
    Idle,
}

impl Outbox {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn send(&self, msg: &Message) {
        let mut st = self.lock();
        if st.closed {
            return;
        }
        st.items.push_back(Item::Text(msg.to_json()));
        self.ready.notify_one();
    }

    pub fn send_fcd(&self, msg: Message) {
        let mut st = self.lock();
        if st.closed {
            return;
        }
        if st.fcd_queued == FCD_BUFFER {
            if let Some(pos) = st.items.iter().position(|i| matches!(i, Item::Fcd(_))) {
                st.items.remove(pos);
                st.fcd_queued -= 1;
                st.dropped += 1;
            }
        }
        st.items.push_back(Item::Fcd(msg));
        st.fcd_queued += 1;
        self.ready.notify_one();
    }

    /// No further messages are accepted; queued ones still drain.
    pub fn close(&self) {
        self.lock().closed = true;
        self.ready.notify_all();
    }

    /// Next serialized message, waiting up to `wait`.
    pub fn next(&self, wait: Duration) -> Next {
        let mut st = self.lock();
        if st.items.is_empty() && !st.closed {
            st = self
                .ready
                .wait_timeout_while(st, wait, |s| s.items.is_empty() && !s.closed)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
        match st.items.pop_front() {
            Some(Item::Text(t)) => Next::Message(t),
            Some(Item::Fcd(mut m)) => {
                st.fcd_queued -= 1;
                let dropped = std::mem::take(&mut st.dropped);
                if let Value::Object(p) = &mut m.payload {
                    p.insert("dropped".into(), dropped.into());
                }
                Next::Message(m.to_json())
            }
            None if st.closed => Next::Closed,
            None => Next::Idle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn fcd(k: u64) -> Message {
        Message::push("fcd_frame", json!({"step_index": k}))
    }

    fn pop(o: &Outbox) -> Value {
        match o.next(Duration::ZERO) {
            Next::Message(s) => serde_json::from_str(&s).unwrap(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stalled_consumer_loses_oldest() {
        let o = Outbox::new();
        for k in 1..=1000 {
            o.send_fcd(fcd(k));
        }
        let first = pop(&o);
        assert_eq!(first["payload"]["dropped"], 1000 - FCD_BUFFER as u64);
        assert_eq!(first["payload"]["step_index"], 1000 - FCD_BUFFER as u64 + 1);
        let second = pop(&o);
        assert_eq!(second["payload"]["dropped"], 0);
    }

    #[test]
    fn replies_survive_pressure() {
        let o = Outbox::new();
        o.send(&Message::new(1, "ok", json!({})));
        for k in 0..600 {
            o.send_fcd(fcd(k));
        }
        o.send(&Message::new(2, "ok", json!({})));
        assert_eq!(pop(&o)["id"], 1);
        let mut fcds = 0;
        loop {
            let m = pop(&o);
            if m["type"] == "ok" {
                assert_eq!(m["id"], 2);
                break;
            }
            fcds += 1;
        }
        assert_eq!(fcds, FCD_BUFFER);
        assert_eq!(o.next(Duration::ZERO), Next::Idle);
    }

    #[test]
    fn close_drains_then_ends() {
        let o = Outbox::new();
        o.send(&Message::new(1, "ok", json!({})));
        o.close();
        o.send(&Message::new(2, "ok", json!({})));
        assert_eq!(pop(&o)["id"], 1);
        assert_eq!(o.next(Duration::from_millis(5)), Next::Closed);
    }
}
