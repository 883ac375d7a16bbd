//! Krauss car-following with dawdling, plus the signal stop rule.

use rand::Rng;

use super::DriverParams;
use crate::network::SignalState;

/// Collision-free speed behind a leader:
/// `v_l + (gap - v_l*tau) / ((v_l + v_f) / (2b) + tau)` with `b` scaled by
/// friction, floored at zero.
pub fn safe_speed(leader_v: f64, gap: f64, follower_v: f64, p: &DriverParams, friction: f64) -> f64 {
    let b = p.decel * friction;
    let v = leader_v + (gap - leader_v * p.tau) / ((leader_v + follower_v) / (2.0 * b) + p.tau);
    v.max(0.0)
}

/// Speed for the next step before dawdling: the minimum of the acceleration
/// limit, the speed cap and the safe speed.
pub fn desired_speed(v: f64, v_safe: f64, speed_cap: f64, p: &DriverParams, dt: f64) -> f64 {
    (v + p.accel * dt).min(speed_cap).min(p.desired_speed).min(v_safe)
}

/// Apply dawdling with a uniform draw `u` in [0, 1).
pub fn dawdle(v_des: f64, p: &DriverParams, dt: f64, u: f64) -> f64 {
    if p.sigma == 0.0 {
        return v_des.max(0.0);
    }
    (v_des - p.sigma * p.accel * dt * u).max(0.0)
}

/// One Krauss update. Draws exactly one number from `rng`.
pub fn bot_step_speed<R: Rng>(
    v: f64,
    v_safe: f64,
    lane_speed_limit: f64,
    p: &DriverParams,
    dt: f64,
    rng: &mut R,
) -> f64 {
    let u: f64 = rng.gen();
    dawdle(desired_speed(v, v_safe, lane_speed_limit, p, dt), p, dt, u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualLeader {
    pub gap: f64,
    pub v: f64,
}

/// A red signal is a standing leader at the stop line; on yellow the vehicle
/// stops only if it can do so comfortably.
pub fn red_light_as_leader(
    v: f64,
    distance: f64,
    state: SignalState,
    p: &DriverParams,
    friction: f64,
) -> Option<VirtualLeader> {
    let standing = VirtualLeader { gap: distance, v: 0.0 };
    match state {
        SignalState::Red => Some(standing),
        SignalState::Yellow => {
            let stopping = v * v / (2.0 * p.decel * friction);
            (distance > stopping).then_some(standing)
        }
        SignalState::Green => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DT;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(tau: f64, decel: f64) -> DriverParams {
        DriverParams {
            tau,
            decel,
            ..DriverParams::default()
        }
    }

    #[test]
    fn follower_may_match_leader_at_tau_gap() {
        for vf in [0.0, 5.0, 10.0, 30.0] {
            for b in [1.0, 4.5, 9.0] {
                assert_eq!(safe_speed(10.0, 10.0, vf, &params(1.0, b), 1.0), 10.0);
            }
        }
    }

    #[test]
    fn standstill_behind_stopped_leader() {
        assert_eq!(safe_speed(0.0, 0.0, 7.0, &DriverParams::default(), 1.0), 0.0);
    }

    #[test]
    fn hand_evaluated_safe_speed() {
        let v = safe_speed(10.0, 30.0, 12.0, &params(1.0, 4.0), 1.0);
        // 10 + 20 / (22/8 + 1)
        assert!((v - (10.0 + 20.0 / 3.75)).abs() < 1e-12);
        assert!((v - 15.3333).abs() < 1e-4);
    }

    #[test]
    fn pure_acceleration_limit() {
        let p = DriverParams {
            accel: 2.0,
            sigma: 0.0,
            ..DriverParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = bot_step_speed(0.0, f64::INFINITY, f64::INFINITY, &p, 0.05, &mut rng);
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn stopped_leader_at_zero_gap() {
        let p = DriverParams { sigma: 0.0, ..DriverParams::default() };
        let v_safe = safe_speed(0.0, 0.0, 5.0, &p, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(bot_step_speed(5.0, v_safe, 13.9, &p, DT, &mut rng), 0.0);
    }

    #[test]
    fn dawdling_is_stream_deterministic() {
        let p = DriverParams { sigma: 0.5, ..DriverParams::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..10)
                .map(|i| bot_step_speed(i as f64, 20.0, 13.9, &p, DT, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn signal_rule() {
        let p = params(1.0, 4.0);
        assert_eq!(
            red_light_as_leader(10.0, 20.0, SignalState::Red, &p, 1.0),
            Some(VirtualLeader { gap: 20.0, v: 0.0 })
        );
        // stopping distance 100/8 = 12.5 > 5: proceed
        assert_eq!(red_light_as_leader(10.0, 5.0, SignalState::Yellow, &p, 1.0), None);
        assert!(red_light_as_leader(10.0, 13.0, SignalState::Yellow, &p, 1.0).is_some());
        assert_eq!(red_light_as_leader(10.0, 1.0, SignalState::Green, &p, 1.0), None);
    }
}
