//! Lane-change request and gap acceptance.

use super::krauss::safe_speed;
use super::{Direction, DriverParams};
use crate::config::{MIN_GAP, OVERTAKE_HORIZON_M, OVERTAKE_SPEED_RATIO};

/// Another vehicle as seen from the deciding bot, bumper-to-bumper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub gap: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Follower {
    pub gap: f64,
    pub v: f64,
    pub params: DriverParams,
}

/// What the bot sees in one adjacent lane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetLane {
    pub leader: Option<Neighbor>,
    pub follower: Option<Follower>,
    /// The lane continues along the bot's route.
    pub keeps_route: bool,
    /// Enough lane left to finish the manoeuvre.
    pub room: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Surroundings {
    pub leader: Option<Neighbor>,
    pub left: Option<TargetLane>,
    pub right: Option<TargetLane>,
    /// Set when the current lane has no connection onto the next route edge.
    pub route_requires: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Stay,
    Change(Direction),
}

impl Surroundings {
    fn side(&self, d: Direction) -> Option<&TargetLane> {
        match d {
            Direction::Left => self.left.as_ref(),
            Direction::Right => self.right.as_ref(),
        }
    }
}

/// Which lane change the bot wants, ignoring safety.
pub fn requested_change(p: &DriverParams, sur: &Surroundings) -> Option<Direction> {
    if let Some(d) = sur.route_requires {
        return sur.side(d).map(|_| d);
    }
    let leader = sur.leader?;
    if leader.gap > OVERTAKE_HORIZON_M || leader.v >= OVERTAKE_SPEED_RATIO * p.desired_speed {
        return None;
    }
    [Direction::Left, Direction::Right].into_iter().find(|&d| {
        sur.side(d).is_some_and(|t| {
            t.keeps_route && t.leader.map_or(true, |tl| tl.v > leader.v)
        })
    })
}

/// Gap acceptance: the new leader must be at least `v*tau` ahead and the new
/// follower must not need more than comfortable braking for one step.
pub fn accepts(v: f64, p: &DriverParams, target: &TargetLane, friction: f64, dt: f64) -> bool {
    if !target.room {
        return false;
    }
    if let Some(l) = target.leader {
        if l.gap < (v * p.tau).max(MIN_GAP) {
            return false;
        }
    }
    if let Some(f) = target.follower {
        if f.gap < MIN_GAP {
            return false;
        }
        let vs = safe_speed(v, f.gap - MIN_GAP, f.v, &f.params, friction);
        if vs < f.v - f.params.decel * friction * dt {
            return false;
        }
    }
    true
}

/// Requested and accepted lane change. Route-required changes take priority
/// over overtaking.
pub fn lane_change_decision(
    v: f64,
    p: &DriverParams,
    sur: &Surroundings,
    friction: f64,
    dt: f64,
) -> Decision {
    match requested_change(p, sur) {
        Some(d) if sur.side(d).is_some_and(|t| accepts(v, p, t, friction, dt)) => Decision::Change(d),
        _ => Decision::Stay,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DT;

    fn free_lane() -> TargetLane {
        TargetLane {
            leader: None,
            follower: None,
            keeps_route: true,
            room: true,
        }
    }

    #[test]
    fn route_required_into_empty_lane() {
        let sur = Surroundings {
            left: Some(free_lane()),
            route_requires: Some(Direction::Left),
            ..Default::default()
        };
        assert_eq!(
            lane_change_decision(10.0, &DriverParams::default(), &sur, 1.0, DT),
            Decision::Change(Direction::Left)
        );
    }

    #[test]
    fn close_fast_follower_rejects() {
        let target = TargetLane {
            follower: Some(Follower {
                gap: 1.0,
                v: 20.0,
                params: DriverParams::default(),
            }),
            ..free_lane()
        };
        let sur = Surroundings {
            left: Some(target),
            route_requires: Some(Direction::Left),
            ..Default::default()
        };
        assert_eq!(
            lane_change_decision(10.0, &DriverParams::default(), &sur, 1.0, DT),
            Decision::Stay
        );
    }

    #[test]
    fn overtake_slow_leader() {
        let p = DriverParams {
            desired_speed: 13.9,
            ..DriverParams::default()
        };
        // leader at 5 m/s < 0.8 * 13.9; only the left lane exists and it is free
        let sur = Surroundings {
            leader: Some(Neighbor { gap: 20.0, v: 5.0 }),
            left: Some(free_lane()),
            ..Default::default()
        };
        assert_eq!(
            lane_change_decision(8.0, &p, &sur, 1.0, DT),
            Decision::Change(Direction::Left)
        );
        // a leader above the threshold does not motivate a change
        let sur_fast = Surroundings {
            leader: Some(Neighbor { gap: 20.0, v: 12.0 }),
            ..sur
        };
        assert_eq!(lane_change_decision(8.0, &p, &sur_fast, 1.0, DT), Decision::Stay);
        // a slower target leader does not help
        let sur_blocked = Surroundings {
            left: Some(TargetLane {
                leader: Some(Neighbor { gap: 50.0, v: 4.0 }),
                ..free_lane()
            }),
            ..sur
        };
        assert_eq!(lane_change_decision(8.0, &p, &sur_blocked, 1.0, DT), Decision::Stay);
    }

    #[test]
    fn short_lead_gap_rejects() {
        let target = TargetLane {
            leader: Some(Neighbor { gap: 5.0, v: 10.0 }),
            ..free_lane()
        };
        assert!(!accepts(10.0, &DriverParams::default(), &target, 1.0, DT));
        assert!(accepts(4.0, &DriverParams::default(), &target, 1.0, DT));
    }

    #[test]
    fn route_requirement_dominates_overtake_side() {
        let p = DriverParams::default();
        let sur = Surroundings {
            leader: Some(Neighbor { gap: 10.0, v: 1.0 }),
            left: Some(free_lane()),
            right: Some(free_lane()),
            route_requires: Some(Direction::Right),
        };
        assert_eq!(requested_change(&p, &sur), Some(Direction::Right));
    }
}
