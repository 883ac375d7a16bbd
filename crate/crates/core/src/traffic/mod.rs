//! Fixed-step microscopic traffic: Krauss car-following bots, a kinematic
//! bicycle ego, path-following pedestrians and deer, and collision detection.

pub mod collision;
pub mod ego;
pub mod krauss;
pub mod lane_change;
mod world;

use serde::{Deserialize, Serialize};

use crate::config;
use crate::geometry::{Polyline, Pose};
use crate::network::LaneIx;

pub use world::{BotSpawn, Flow, SimEvent, SpawnError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    BotCar,
    EgoCar,
    Pedestrian,
    Deer,
}

impl AgentKind {
    /// Footprint (length, width) in metres.
    pub fn dims(self) -> (f64, f64) {
        match self {
            AgentKind::BotCar | AgentKind::EgoCar => config::CAR_DIMS,
            AgentKind::Pedestrian => config::PEDESTRIAN_DIMS,
            AgentKind::Deer => config::DEER_DIMS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::BotCar => "bot_car",
            AgentKind::EgoCar => "ego_car",
            AgentKind::Pedestrian => "pedestrian",
            AgentKind::Deer => "deer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Gear {
    #[default]
    D,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    #[default]
    Off,
    Left,
    Right,
}

/// Driver inputs for the ego. Construct through [`Controls::clamped`] when the
/// values come from outside.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Controls {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
    pub gear: Gear,
}

impl Controls {
    /// Clamp into the legal ranges; NaN inputs become 0.
    pub fn clamped(throttle: f64, brake: f64, steer: f64, gear: Gear) -> Self {
        let fix = |x: f64, lo: f64, hi: f64| if x.is_nan() { 0.0 } else { x.clamp(lo, hi) };
        Self {
            throttle: fix(throttle, 0.0, 1.0),
            brake: fix(brake, 0.0, 1.0),
            steer: fix(steer, -1.0, 1.0),
            gear,
        }
    }

    pub fn full_brake() -> Self {
        Self {
            brake: 1.0,
            ..Self::default()
        }
    }
}

/// Car-following parameters for a bot. Missing fields take the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverParams {
    pub accel: f64,
    pub decel: f64,
    pub tau: f64,
    pub sigma: f64,
    pub desired_speed: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            accel: config::BOT_ACCEL,
            decel: config::BOT_DECEL,
            tau: config::BOT_TAU,
            sigma: config::BOT_SIGMA,
            desired_speed: config::BOT_DESIRED_SPEED,
        }
    }
}

impl DriverParams {
    pub fn is_valid(&self) -> bool {
        self.accel > 0.0
            && self.decel > 0.0
            && self.tau > 0.0
            && (0.0..=1.0).contains(&self.sigma)
            && self.desired_speed >= 0.0
            && self.desired_speed.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weather {
    /// Scales every deceleration limit; in (0, 1].
    pub friction: f64,
    /// Metres; logged and forwarded only.
    pub visibility: f64,
}

impl Default for Weather {
    fn default() -> Self {
        Self {
            friction: 1.0,
            visibility: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn lane_offset(self) -> i32 {
        match self {
            Direction::Left => 1,
            Direction::Right => -1,
        }
    }

    pub fn indicator(self) -> Indicator {
        match self {
            Direction::Left => Indicator::Left,
            Direction::Right => Indicator::Right,
        }
    }
}

/// Scenario-imposed speed target for a bot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedOverride {
    pub target: f64,
    /// Deceleration used to reach a lower target; defaults to the bot's own.
    pub decel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneChangeMotion {
    pub from_lane: LaneIx,
    pub direction: Direction,
    pub progress: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendingChange {
    pub direction: Direction,
    pub since_step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BotState {
    pub params: DriverParams,
    /// Edges still to be entered, in order.
    pub route: std::collections::VecDeque<String>,
    pub prev_lane: Option<LaneIx>,
    pub lane_change: Option<LaneChangeMotion>,
    pub pending: Option<PendingChange>,
    pub speed_override: Option<SpeedOverride>,
    pub ignore_signals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathState {
    pub path: Polyline,
    pub travelled: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Behavior {
    Bot(Box<BotState>),
    Ego { controls: Controls },
    Path(PathState),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleState {
    pub id: String,
    pub kind: AgentKind,
    /// Lane the agent is on; path agents off the carriageway have none.
    pub lane: Option<LaneIx>,
    pub s: f64,
    pub pose: Pose,
    /// Longitudinal speed; negative only for the ego in reverse.
    pub v: f64,
    pub a: f64,
    pub length: f64,
    pub width: f64,
    pub brake_light: bool,
    pub indicator: Indicator,
    pub behavior: Behavior,
}

impl VehicleState {
    pub fn controls(&self) -> Option<Controls> {
        match &self.behavior {
            Behavior::Ego { controls } => Some(*controls),
            _ => None,
        }
    }

    pub fn bot(&self) -> Option<&BotState> {
        match &self.behavior {
            Behavior::Bot(b) => Some(b),
            _ => None,
        }
    }

    pub fn bot_mut(&mut self) -> Option<&mut BotState> {
        match &mut self.behavior {
            Behavior::Bot(b) => Some(b),
            _ => None,
        }
    }

    pub fn rect(&self) -> crate::geometry::OrientedRect {
        crate::geometry::OrientedRect::new(self.pose, self.length, self.width)
    }
}

/// A collision between two agents, reported once per contact episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub id_a: String,
    pub id_b: String,
    pub x: f64,
    pub y: f64,
}
