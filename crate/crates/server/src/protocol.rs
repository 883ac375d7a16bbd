//! Message envelope, request catalog and error codes.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const PROTOCOL_VERSION: &str = "1.0";
pub const PROTOCOL_MAJOR: u64 = 1;

/// Upper bound on `step{n}` so one request cannot stall the loop for long.
pub const MAX_STEP_BATCH: u64 = 100_000;
pub const MAX_RATE_HZ: f64 = 1000.0;
pub const DEFAULT_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    #[serde(rename = "type")]
    pub kind: String,
    pub payload: Value,
}

impl Message {
    pub fn new(id: u64, kind: &str, payload: Value) -> Self {
        Self { id, kind: kind.to_string(), payload }
    }

    pub fn push(kind: &str, payload: Value) -> Self {
        Self::new(0, kind, payload)
    }

    pub fn error(id: u64, code: ErrorCode, detail: impl Into<String>) -> Self {
        Self::new(id, "error", json!({"code": code, "detail": detail.into()}))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadJson,
    UnknownType,
    NotLoaded,
    NotController,
    BadMode,
    VersionMismatch,
    OversizeFrame,
    HelloRequired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Controller,
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Fcd,
    Events,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Stepped,
    Realtime,
}

fn default_gear() -> precrash_core::traffic::Gear {
    precrash_core::traffic::Gear::D
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Request {
    Hello {
        version: String,
        #[serde(default)]
        role: Option<Role>,
    },
    ListScenarios {},
    LoadScenario {
        id: String,
        #[serde(default)]
        seed: u64,
    },
    SetMode {
        mode: ModeName,
        #[serde(default)]
        rate_hz: Option<f64>,
    },
    Step {
        n: u64,
    },
    SetControl {
        throttle: f64,
        brake: f64,
        steer: f64,
        #[serde(default = "default_gear")]
        gear: precrash_core::traffic::Gear,
    },
    GetState {},
    Subscribe {
        channels: Vec<Channel>,
    },
    EndRun {},
}

pub const REQUEST_TYPES: [&str; 9] = [
    "hello",
    "list_scenarios",
    "load_scenario",
    "set_mode",
    "step",
    "set_control",
    "get_state",
    "subscribe",
    "end_run",
];

/// A request that could not be decoded, already turned into its reply.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected(pub Message);

/// Decode one frame body into `(id, request)`.
pub fn parse_request(body: &[u8]) -> Result<(u64, Request), Rejected> {
    let bad = |id, detail: String| Rejected(Message::error(id, ErrorCode::BadJson, detail));
    let text = std::str::from_utf8(body).map_err(|e| bad(0, format!("body is not UTF-8: {e}")))?;
    let value: Value = serde_json::from_str(text).map_err(|e| bad(0, e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(bad(0, "body must be a JSON object".into()));
    };
    let id = match obj.get("id") {
        Some(v) => v.as_u64().ok_or_else(|| bad(0, "id must be a non-negative integer".into()))?,
        None => return Err(bad(0, "missing id".into())),
    };
    let kind = match obj.remove("type") {
        Some(Value::String(s)) => s,
        _ => return Err(bad(id, "type must be a string".into())),
    };
    if !REQUEST_TYPES.contains(&kind.as_str()) {
        return Err(Rejected(Message::error(id, ErrorCode::UnknownType, format!("unknown type {kind:?}"))));
    }
    let payload = match obj.remove("payload") {
        None | Some(Value::Null) => Value::Object(Map::new()),
        Some(p @ Value::Object(_)) => p,
        Some(_) => return Err(bad(id, "payload must be an object".into())),
    };
    serde_json::from_value(json!({"type": kind, "payload": payload}))
        .map(|r| (id, r))
        .map_err(|e| bad(id, format!("{kind}: {e}")))
}

/// Major component of a `major.minor` version string.
pub fn major_version(v: &str) -> Option<u64> {
    v.split('.').next()?.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(r: Result<(u64, Request), Rejected>) -> (u64, Value) {
        let m = r.unwrap_err().0;
        (m.id, m.payload["code"].clone())
    }

    #[test]
    fn decodes_requests() {
        let (id, r) = parse_request(br#"{"id": 7, "type": "step", "payload": {"n": 50}}"#).unwrap();
        assert_eq!((id, r), (7, Request::Step { n: 50 }));
        let (_, r) = parse_request(br#"{"id": 1, "type": "get_state"}"#).unwrap();
        assert_eq!(r, Request::GetState {});
        let (_, r) = parse_request(br#"{"id": 1, "type": "set_control", "payload": {"throttle": 0.5, "brake": 0, "steer": -0.1}}"#).unwrap();
        assert!(matches!(r, Request::SetControl { gear: precrash_core::traffic::Gear::D, .. }));
    }

    #[test]
    fn error_codes() {
        assert_eq!(code(parse_request(b"\xff\xfe")), (0, json!("BAD_JSON")));
        assert_eq!(code(parse_request(b"[1,2]")), (0, json!("BAD_JSON")));
        assert_eq!(code(parse_request(br#"{"id": 3, "type": "fly"}"#)), (3, json!("UNKNOWN_TYPE")));
        assert_eq!(code(parse_request(br#"{"id": 4, "type": "step", "payload": {"n": -1}}"#)), (4, json!("BAD_JSON")));
        assert_eq!(code(parse_request(br#"{"id": 5, "type": "step", "payload": 3}"#)), (5, json!("BAD_JSON")));
    }

    #[test]
    fn versions() {
        assert_eq!(major_version("1.0"), Some(1));
        assert_eq!(major_version("2"), Some(2));
        assert_eq!(major_version("x.1"), None);
    }

    #[test]
    fn envelope_shape() {
        let m = Message::error(9, ErrorCode::NotController, "observer");
        assert_eq!(
            m.to_json(),
            r#"{"id":9,"type":"error","payload":{"code":"NOT_CONTROLLER","detail":"observer"}}"#
        );
    }
}
