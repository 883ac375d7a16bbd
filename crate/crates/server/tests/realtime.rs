mod common;

use std::time::{Duration, Instant};

use common::{start, Client, Tcp};
use serde_json::json;

fn realtime_for(rate_hz: f64, wall: Duration) -> (u64, f64, Tcp) {
    let mut c = Tcp::connect(start());
    c.hello();
    c.call(json!({"id": 2, "type": "load_scenario", "payload": {"id": "practice", "seed": 0}}));
    c.call(json!({"id": 3, "type": "set_control", "payload": {"throttle": 0.3, "brake": 0, "steer": 0}}));
    let r = c.call(json!({"id": 4, "type": "set_mode", "payload": {"mode": "realtime", "rate_hz": rate_hz}}));
    assert_eq!(r["payload"]["mode"], "realtime");
    let started = Instant::now();
    std::thread::sleep(wall.saturating_sub(started.elapsed()));
    let s = c.call(json!({"id": 5, "type": "get_state"}));
    (
        s["payload"]["step_index"].as_u64().unwrap(),
        s["payload"]["t"].as_f64().unwrap(),
        c,
    )
}

#[test]
fn fifty_hertz_tracks_wall_time() {
    let (k, _, mut c) = realtime_for(50.0, Duration::from_secs(2));
    assert!((95..=105).contains(&k), "step_index {k} after 2 s at 50 Hz");
    // silence holds the last controls
    let s = c.call(json!({"id": 6, "type": "get_state"}));
    let ego = s["payload"]["vehicles"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["vehicle_id"] == "ego")
        .unwrap()
        .clone();
    assert_eq!(ego["throttle"], 0.3);
}

#[test]
fn hundred_hertz_is_double_speed() {
    let (_, t, _) = realtime_for(100.0, Duration::from_secs(1));
    assert!((1.9..=2.1).contains(&t), "simulated {t} s after 1 wall second at 100 Hz");
}

#[test]
fn clock_heartbeat_reports_lag() {
    let mut c = Tcp::connect(start());
    c.hello();
    c.call(json!({"id": 2, "type": "load_scenario", "payload": {"id": "practice", "seed": 0}}));
    c.call(json!({"id": 3, "type": "subscribe", "payload": {"channels": ["events"]}}));
    c.call(json!({"id": 4, "type": "set_mode", "payload": {"mode": "realtime"}}));
    let clock = loop {
        let m = c.recv().expect("clock push within the read timeout");
        if m["type"] == "clock" {
            break m;
        }
    };
    assert_eq!(clock["id"], 0);
    assert!(clock["payload"]["lag_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(clock["payload"]["rate_hz"], 50.0);
    // back to stepped: stepping is legal again and the clock stops
    let r = c.call(json!({"id": 5, "type": "set_mode", "payload": {"mode": "stepped"}}));
    assert_eq!(r["type"], "ok");
    let k0 = c.call(json!({"id": 6, "type": "get_state"}))["payload"]["step_index"].as_u64().unwrap();
    std::thread::sleep(Duration::from_millis(200));
    let k1 = c.call(json!({"id": 7, "type": "get_state"}))["payload"]["step_index"].as_u64().unwrap();
    assert_eq!(k0, k1);
}
