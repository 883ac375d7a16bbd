//! Tunable simulation defaults. Every constant that shapes dynamics lives here.

/// Fixed simulation step (50 Hz).
pub const DT: f64 = 0.02;

/// Steps per simulated second.
pub const STEPS_PER_SECOND: u64 = 50;

/// Lane width used when a network file omits it.
pub const DEFAULT_LANE_WIDTH: f64 = 3.5;

/// Bot car-following defaults (Krauss).
pub const BOT_ACCEL: f64 = 2.6;
pub const BOT_DECEL: f64 = 4.5;
pub const BOT_TAU: f64 = 1.0;
pub const BOT_SIGMA: f64 = 0.5;
pub const BOT_DESIRED_SPEED: f64 = 13.89;

/// Standstill distance kept behind a leader, bumper to bumper.
pub const MIN_GAP: f64 = 2.5;

/// Deceleration threshold below which a bot shows brake lights.
pub const BRAKE_LIGHT_DECEL: f64 = -1.0;

/// Lane-change timing: indicator lead time and lateral motion duration.
pub const INDICATOR_LEAD_S: f64 = 1.0;
pub const LANE_CHANGE_DURATION_S: f64 = 2.0;
pub const FORCED_LANE_CHANGE_DURATION_S: f64 = 1.0;
/// Overtaking is considered when the leader drives below this share of the
/// desired speed.
pub const OVERTAKE_SPEED_RATIO: f64 = 0.8;
/// Leaders farther away than this do not motivate an overtake.
pub const OVERTAKE_HORIZON_M: f64 = 60.0;

/// Extra look-ahead beyond the stopping distance when searching leaders.
pub const LOOKAHEAD_MARGIN_M: f64 = 50.0;

/// Yielding vehicles wait while a priority vehicle is this close in time.
pub const YIELD_HORIZON_S: f64 = 3.5;

/// Ego kinematic bicycle.
pub const EGO_ACCEL: f64 = 3.0;
pub const EGO_DECEL: f64 = 8.0;
pub const EGO_WHEELBASE: f64 = 2.8;
pub const EGO_MAX_STEER: f64 = 0.5;
pub const EGO_MAX_REVERSE: f64 = 5.0;

/// Footprints (length, width) per agent kind.
pub const CAR_DIMS: (f64, f64) = (4.5, 1.8);
pub const PEDESTRIAN_DIMS: (f64, f64) = (0.6, 0.6);
pub const DEER_DIMS: (f64, f64) = (1.5, 0.6);

/// Tolerance for the closed-overlap collision convention.
pub const CONTACT_EPS: f64 = 1e-9;

/// Grace period a run continues after the ego collides.
pub const COLLISION_GRACE_S: f64 = 3.0;

/// Brake input above which the ego counts as reacting.
pub const REACTION_BRAKE_THRESHOLD: f64 = 0.1;

/// Defensive scripted ego: full brake when predicted time to collision drops
/// below this.
pub const DEFENSIVE_TTC_S: f64 = 2.0;
