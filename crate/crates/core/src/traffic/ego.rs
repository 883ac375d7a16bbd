//! Kinematic bicycle model for the driver-controlled ego vehicle.

use super::{Controls, Gear, Weather};
use crate::config::{EGO_ACCEL, EGO_DECEL, EGO_MAX_REVERSE, EGO_MAX_STEER, EGO_WHEELBASE};

/// Planar state of the ego. `v` is signed: negative while reversing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BicycleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoParams {
    pub accel: f64,
    pub decel: f64,
    pub wheelbase: f64,
    pub max_steer: f64,
    pub max_reverse: f64,
}

impl Default for EgoParams {
    fn default() -> Self {
        Self {
            accel: EGO_ACCEL,
            decel: EGO_DECEL,
            wheelbase: EGO_WHEELBASE,
            max_steer: EGO_MAX_STEER,
            max_reverse: EGO_MAX_REVERSE,
        }
    }
}

/// Commanded longitudinal acceleration. Throttle drives along the selected
/// gear; the brake always opposes the gear's direction of travel.
pub fn commanded_accel(c: &Controls, p: &EgoParams, weather: &Weather) -> f64 {
    let drive = c.throttle * p.accel;
    let brake = c.brake * p.decel * weather.friction;
    match c.gear {
        Gear::D => drive - brake,
        Gear::R => -drive + brake,
    }
}

/// One explicit Euler step. Returns the new state and the realised
/// acceleration after gear clamping.
pub fn ego_step(
    s: &BicycleState,
    c: &Controls,
    p: &EgoParams,
    weather: &Weather,
    dt: f64,
) -> (BicycleState, f64) {
    let a = commanded_accel(c, p, weather);
    let v_raw = s.v + a * dt;
    let v = match c.gear {
        Gear::D => v_raw.max(0.0),
        Gear::R => v_raw.clamp(-p.max_reverse, 0.0),
    };
    let yaw_rate = s.v / p.wheelbase * (c.steer * p.max_steer).tan();
    let mut heading = s.heading + yaw_rate * dt;
    if heading > std::f64::consts::PI || heading <= -std::f64::consts::PI {
        heading = heading.sin().atan2(heading.cos());
    }
    let next = BicycleState {
        x: s.x + s.v * s.heading.cos() * dt,
        y: s.y + s.v * s.heading.sin() * dt,
        heading,
        v,
    };
    (next, (v - s.v) / dt)
}
