use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::collision::detect_collisions;
use super::ego::{ego_step, BicycleState, EgoParams};
use super::krauss::{dawdle, desired_speed, red_light_as_leader, safe_speed};
use super::lane_change::{accepts, requested_change, Follower, Neighbor, Surroundings, TargetLane};
use super::{
    AgentKind, Behavior, BotState, CollisionEvent, Controls, Direction, DriverParams, Indicator,
    LaneChangeMotion, PathState, PendingChange, SpeedOverride, VehicleState, Weather,
};
use crate::config::{
    BRAKE_LIGHT_DECEL, DT, FORCED_LANE_CHANGE_DURATION_S, INDICATOR_LEAD_S, LANE_CHANGE_DURATION_S,
    LOOKAHEAD_MARGIN_M, MIN_GAP, STEPS_PER_SECOND, YIELD_HORIZON_S,
};
use crate::geometry::{Polyline, Pose, Vec2};
use crate::network::{ConnIx, LaneIx, RoadNetwork, SignalState};

/// Length of generated random-walk routes.
const RANDOM_ROUTE_EDGES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpawnError {
    #[error("unknown lane `{0}`")]
    UnknownLane(String),
    #[error("unknown edge `{0}` in route")]
    UnknownEdge(String),
    #[error("duplicate agent id `{0}`")]
    DuplicateId(String),
    #[error("arc length {s} outside lane `{lane}`")]
    OutOfRange { lane: String, s: f64 },
    #[error("invalid parameters for `{0}`")]
    InvalidParams(String),
    #[error("bots must start on a regular lane, `{0}` is junction-internal")]
    InternalLane(String),
    #[error("agent path needs at least two distinct points")]
    BadPath,
    #[error("placed {placed} of {requested} vehicles")]
    Saturated { placed: usize, requested: usize },
}

/// Initial state of a bot.
#[derive(Debug, Clone, PartialEq)]
pub struct BotSpawn {
    pub id: String,
    pub lane: String,
    pub s: f64,
    pub v0: f64,
    /// Edges to enter after the starting one.
    pub route: Vec<String>,
    pub params: DriverParams,
}

/// Poisson-like inflow: each step spawns with probability `rate * dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flow {
    pub id: String,
    pub entry_edge: String,
    pub rate: f64,
    /// Edges after the entry edge; a random walk when absent.
    pub route: Option<Vec<String>>,
    pub params: DriverParams,
    pub spawned: u64,
}

/// Things that happened during a step, drained by the caller.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimEvent {
    Collision(CollisionEvent),
    RedLightCrossing { time: f64, vehicle: String, lane: String },
}

#[derive(Debug, Clone, Copy)]
struct Occupant {
    s: f64,
    half: f64,
    v: f64,
    idx: usize,
}

/// Per-lane sorted occupancy, including the parts of vehicles that hang over
/// a lane boundary.
#[derive(Debug, Clone, Default)]
struct Occupancy {
    lanes: Vec<Vec<Occupant>>,
}

impl Occupancy {
    fn rebuild(&mut self, net: &RoadNetwork, vehicles: &[VehicleState]) {
        self.lanes.resize_with(net.lane_count(), Vec::new);
        for l in &mut self.lanes {
            l.clear();
        }
        for (idx, v) in vehicles.iter().enumerate() {
            let Some(lane) = v.lane else { continue };
            let half = v.length / 2.0;
            let speed = v.v.max(0.0);
            let mut push = |lane: LaneIx, s: f64| {
                self.lanes[lane.0 as usize].push(Occupant { s, half, v: speed, idx })
            };
            push(lane, v.s);
            if let Behavior::Bot(bot) = &v.behavior {
                let len = net.lane(lane).length();
                if let Some(lc) = &bot.lane_change {
                    let from_len = net.lane(lc.from_lane).length();
                    push(lc.from_lane, v.s * from_len / len);
                }
                if v.s - half < 0.0 {
                    if let Some(prev) = bot.prev_lane {
                        push(prev, v.s + net.lane(prev).length());
                    }
                }
                if v.s + half > len {
                    if let Some(next) = planned_next(net, lane, &bot.route) {
                        push(net.next_lane_via_or_lane(next), v.s - len);
                    }
                }
            }
        }
        for l in &mut self.lanes {
            l.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.idx.cmp(&b.idx)));
        }
    }

    fn on(&self, lane: LaneIx) -> &[Occupant] {
        &self.lanes[lane.0 as usize]
    }

    fn ahead(&self, lane: LaneIx, s: f64, me: usize) -> Option<Occupant> {
        self.on(lane).iter().copied().find(|o| o.idx != me && o.s > s)
    }

    fn behind(&self, lane: LaneIx, s: f64, me: usize) -> Option<Occupant> {
        self.on(lane).iter().rev().copied().find(|o| o.idx != me && o.s <= s)
    }

    fn first(&self, lane: LaneIx, me: usize) -> Option<Occupant> {
        self.on(lane).iter().copied().find(|o| o.idx != me)
    }
}

/// Where a vehicle leaves `lane` next, given its remaining route.
#[derive(Debug, Clone, Copy, PartialEq)]
enum NextHop {
    /// Leaving a junction-internal lane onto its target lane.
    Exit(LaneIx),
    /// Crossing a junction through a connection.
    Via(ConnIx),
}

impl RoadNetwork {
    fn next_lane_via_or_lane(&self, hop: NextHop) -> LaneIx {
        match hop {
            NextHop::Exit(l) => l,
            NextHop::Via(c) => self.next_lane_via(c),
        }
    }
}

fn planned_next(net: &RoadNetwork, lane: LaneIx, route: &VecDeque<String>) -> Option<NextHop> {
    let l = net.lane(lane);
    if let Some(c) = l.connection {
        return Some(NextHop::Exit(net.connection(c).to_lane));
    }
    let next_edge = route.front()?;
    net.connection_to_edge(lane, next_edge).map(NextHop::Via)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Obstacle {
    gap: f64,
    v: f64,
    vehicle: bool,
}

/// Outcome of the decision phase for one bot.
#[derive(Debug, Clone)]
struct BotDecision {
    v_next: f64,
    pending: Option<PendingChange>,
    start_change: Option<(Direction, LaneIx)>,
}

/// The complete simulation state. Owned by exactly one stepping context.
#[derive(Debug, Clone, Serialize)]
pub struct WorldState {
    #[serde(skip)]
    network: Arc<RoadNetwork>,
    time: f64,
    step_index: u64,
    vehicles: Vec<VehicleState>,
    rng: ChaCha8Rng,
    weather: Weather,
    collisions: Vec<CollisionEvent>,
    contacts: BTreeSet<(String, String)>,
    flows: Vec<Flow>,
    #[serde(skip)]
    events: Vec<SimEvent>,
    #[serde(skip)]
    ego_params: EgoParams,
    #[serde(skip)]
    occupancy: Occupancy,
}

impl WorldState {
    pub fn new(network: Arc<RoadNetwork>, seed: u64, weather: Weather) -> Self {
        Self {
            network,
            time: 0.0,
            step_index: 0,
            vehicles: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            weather,
            collisions: Vec::new(),
            contacts: BTreeSet::new(),
            flows: Vec::new(),
            events: Vec::new(),
            ego_params: EgoParams::default(),
            occupancy: Occupancy::default(),
        }
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn network_arc(&self) -> &Arc<RoadNetwork> {
        &self.network
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn weather(&self) -> Weather {
        self.weather
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn collisions(&self) -> &[CollisionEvent] {
        &self.collisions
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    fn position(&self, id: &str) -> Result<usize, usize> {
        self.vehicles.binary_search_by(|v| v.id.as_str().cmp(id))
    }

    pub fn vehicle(&self, id: &str) -> Option<&VehicleState> {
        self.position(id).ok().map(|i| &self.vehicles[i])
    }

    pub fn vehicle_mut(&mut self, id: &str) -> Option<&mut VehicleState> {
        self.position(id).ok().map(|i| &mut self.vehicles[i])
    }

    fn insert(&mut self, v: VehicleState) -> Result<(), SpawnError> {
        match self.position(&v.id) {
            Ok(_) => Err(SpawnError::DuplicateId(v.id)),
            Err(i) => {
                self.vehicles.insert(i, v);
                Ok(())
            }
        }
    }

    pub fn drain_events(&mut self) -> Vec<SimEvent> {
        std::mem::take(&mut self.events)
    }

    fn lane_checked(&self, lane: &str, s: f64) -> Result<LaneIx, SpawnError> {
        let ix = self
            .network
            .lane_ix(lane)
            .ok_or_else(|| SpawnError::UnknownLane(lane.to_string()))?;
        let len = self.network.lane(ix).length();
        if !(0.0..=len).contains(&s) {
            return Err(SpawnError::OutOfRange {
                lane: lane.to_string(),
                s,
            });
        }
        Ok(ix)
    }

    pub fn add_bot(&mut self, spawn: BotSpawn) -> Result<(), SpawnError> {
        let lane = self.lane_checked(&spawn.lane, spawn.s)?;
        if self.network.lane(lane).is_internal() {
            return Err(SpawnError::InternalLane(spawn.lane));
        }
        if !spawn.params.is_valid() || !(spawn.v0 >= 0.0 && spawn.v0.is_finite()) {
            return Err(SpawnError::InvalidParams(spawn.id));
        }
        for e in &spawn.route {
            if self.network.edge(e).is_none() {
                return Err(SpawnError::UnknownEdge(e.clone()));
            }
        }
        let (length, width) = AgentKind::BotCar.dims();
        let vehicle = VehicleState {
            id: spawn.id,
            kind: AgentKind::BotCar,
            lane: Some(lane),
            s: spawn.s,
            pose: self.network.lane(lane).shape.pose_at(spawn.s),
            v: spawn.v0,
            a: 0.0,
            length,
            width,
            brake_light: false,
            indicator: Indicator::Off,
            behavior: Behavior::Bot(Box::new(BotState {
                params: spawn.params,
                route: spawn.route.into(),
                prev_lane: None,
                lane_change: None,
                pending: None,
                speed_override: None,
                ignore_signals: false,
            })),
        };
        self.insert(vehicle)
    }

    pub fn add_ego(&mut self, id: &str, lane: &str, s: f64, v0: f64) -> Result<(), SpawnError> {
        let ix = self.lane_checked(lane, s)?;
        if !v0.is_finite() {
            return Err(SpawnError::InvalidParams(id.to_string()));
        }
        let (length, width) = AgentKind::EgoCar.dims();
        let vehicle = VehicleState {
            id: id.to_string(),
            kind: AgentKind::EgoCar,
            lane: Some(ix),
            s,
            pose: self.network.lane(ix).shape.pose_at(s),
            v: v0,
            a: 0.0,
            length,
            width,
            brake_light: false,
            indicator: Indicator::Off,
            behavior: Behavior::Ego {
                controls: Controls::default(),
            },
        };
        self.insert(vehicle)
    }

    /// Pedestrian or deer walking `path` at constant `speed`; despawns at the end.
    pub fn add_path_agent(
        &mut self,
        id: &str,
        kind: AgentKind,
        path: Vec<Vec2>,
        speed: f64,
    ) -> Result<(), SpawnError> {
        let path = Polyline::new(path).ok_or(SpawnError::BadPath)?;
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(SpawnError::InvalidParams(id.to_string()));
        }
        let (length, width) = kind.dims();
        let pose = path.pose_at(0.0);
        let mut vehicle = VehicleState {
            id: id.to_string(),
            kind,
            lane: None,
            s: 0.0,
            pose,
            v: speed,
            a: 0.0,
            length,
            width,
            brake_light: false,
            indicator: Indicator::Off,
            behavior: Behavior::Path(PathState {
                path,
                travelled: 0.0,
                speed,
            }),
        };
        self.project_off_lane(&mut vehicle);
        self.insert(vehicle)
    }

    pub fn add_flow(&mut self, flow: Flow) -> Result<(), SpawnError> {
        if self.network.edge(&flow.entry_edge).is_none() {
            return Err(SpawnError::UnknownEdge(flow.entry_edge));
        }
        if let Some(route) = &flow.route {
            if let Some(bad) = route.iter().find(|e| self.network.edge(e).is_none()) {
                return Err(SpawnError::UnknownEdge(bad.clone()));
            }
        }
        if !flow.params.is_valid() || !(flow.rate >= 0.0 && flow.rate.is_finite()) {
            return Err(SpawnError::InvalidParams(flow.id));
        }
        self.flows.push(flow);
        Ok(())
    }

    /// Latest ego inputs; they apply from the next step on.
    pub fn set_controls(&mut self, id: &str, controls: Controls) -> bool {
        match self.vehicle_mut(id).map(|v| &mut v.behavior) {
            Some(Behavior::Ego { controls: c }) => {
                *c = controls;
                true
            }
            _ => false,
        }
    }

    pub fn set_speed_override(&mut self, id: &str, ov: SpeedOverride) -> bool {
        match self.vehicle_mut(id).and_then(|v| v.bot_mut()) {
            Some(bot) => {
                bot.speed_override = Some(ov);
                true
            }
            None => false,
        }
    }

    pub fn set_ignore_signals(&mut self, id: &str) -> bool {
        match self.vehicle_mut(id).and_then(|v| v.bot_mut()) {
            Some(bot) => {
                bot.ignore_signals = true;
                true
            }
            None => false,
        }
    }

    /// Immediate lateral move to the neighbouring lane, skipping gap
    /// acceptance and indicator lead time.
    pub fn force_lane_change(&mut self, id: &str, direction: Direction) -> bool {
        let net = Arc::clone(&self.network);
        let Some(v) = self.vehicle_mut(id) else {
            return false;
        };
        let Some(lane) = v.lane else { return false };
        let Some(target) = net.neighbour_lane(lane, direction.lane_offset()) else {
            return false;
        };
        let s = v.s;
        let Behavior::Bot(bot) = &mut v.behavior else {
            return false;
        };
        bot.pending = None;
        bot.lane_change = Some(LaneChangeMotion {
            from_lane: lane,
            direction,
            progress: 0.0,
            duration: FORCED_LANE_CHANGE_DURATION_S,
        });
        let ratio = net.lane(target).length() / net.lane(lane).length();
        v.lane = Some(target);
        v.s = (s * ratio).min(net.lane(target).length());
        v.indicator = direction.indicator();
        true
    }

    /// Signal indications of every controlled connection at the current time.
    pub fn signal_states(&self) -> Vec<(String, String, SignalState)> {
        let net = &self.network;
        (0..net.connections().len())
            .filter_map(|i| {
                let c = ConnIx(i as u32);
                let conn = net.connection(c);
                net.signal_state(c, self.time).ok().map(|st| {
                    (
                        net.lane(conn.from_lane).id.clone(),
                        net.lane(conn.to_lane).id.clone(),
                        st,
                    )
                })
            })
            .collect()
    }

    /// Random walk over successor edges, drawn from the world stream.
    pub fn random_route(&mut self, start_edge: &str, edges: usize) -> Vec<String> {
        let mut route = Vec::with_capacity(edges);
        let mut cur = start_edge.to_string();
        for _ in 0..edges {
            let succ = self.network.successor_edges(&cur);
            if succ.is_empty() {
                break;
            }
            let u: f64 = self.rng.gen();
            let pick = ((u * succ.len() as f64) as usize).min(succ.len() - 1);
            cur = succ[pick].to_string();
            route.push(cur.clone());
        }
        route
    }

    /// Place `count` standing bots at random free positions on regular lanes.
    /// Ids are `<prefix><n>` with zero padding. When random placement stalls,
    /// the remaining bots fill free slots in lane order.
    pub fn spawn_random_bots(
        &mut self,
        prefix: &str,
        count: usize,
        params: DriverParams,
    ) -> Result<usize, SpawnError> {
        let lanes: Vec<LaneIx> = self
            .network
            .lanes()
            .filter(|(_, l)| !l.is_internal() && l.length() > 20.0)
            .map(|(ix, _)| ix)
            .collect();
        if lanes.is_empty() {
            return Err(SpawnError::Saturated { placed: 0, requested: count });
        }
        let total: f64 = lanes.iter().map(|&l| self.network.lane(l).length()).sum();
        let (length, _) = AgentKind::BotCar.dims();
        let clearance = length + MIN_GAP + 2.0;
        // keep clear of lane ends so nobody starts inside a junction queue
        let margin = length / 2.0 + 10.0;
        let mut placed = 0;
        let mut attempts = 0;
        while placed < count && attempts < 200 * count.max(1) {
            attempts += 1;
            let mut u: f64 = self.rng.gen::<f64>() * total;
            let mut lane = lanes[lanes.len() - 1];
            for &l in &lanes {
                let len = self.network.lane(l).length();
                if u < len {
                    lane = l;
                    break;
                }
                u -= len;
            }
            let len = self.network.lane(lane).length();
            if len <= 2.0 * margin {
                continue;
            }
            let s = margin + self.rng.gen::<f64>() * (len - 2.0 * margin);
            if self.try_place_bot(prefix, placed, lane, s, clearance, params)? {
                placed += 1;
            }
        }
        'sweep: for &lane in &lanes {
            let len = self.network.lane(lane).length();
            let mut s = margin;
            while s <= len - margin {
                if placed == count {
                    break 'sweep;
                }
                if self.try_place_bot(prefix, placed, lane, s, clearance, params)? {
                    placed += 1;
                }
                s += 1.0;
            }
        }
        if placed < count {
            return Err(SpawnError::Saturated { placed, requested: count });
        }
        Ok(placed)
    }

    fn try_place_bot(
        &mut self,
        prefix: &str,
        n: usize,
        lane: LaneIx,
        s: f64,
        clearance: f64,
        params: DriverParams,
    ) -> Result<bool, SpawnError> {
        let (length, _) = AgentKind::BotCar.dims();
        // same lane: a full following gap; elsewhere only physical clearance
        let here = self.network.lane(lane).shape.pose_at(s).position();
        let blocked = self.vehicles.iter().any(|v| {
            v.lane == Some(lane) && (v.s - s).abs() < clearance
                || v.pose.position().dist(here) < length
        });
        if blocked {
            return Ok(false);
        }
        let edge = self.network.lane(lane).edge.clone().expect("regular lane");
        let route = self.random_route(&edge, RANDOM_ROUTE_EDGES);
        self.add_bot(BotSpawn {
            id: format!("{prefix}{n:05}"),
            lane: self.network.lane(lane).id.clone(),
            s,
            v0: 0.0,
            route,
            params,
        })?;
        Ok(true)
    }

    /// Advance by one fixed step.
    pub fn step(&mut self) {
        let net = Arc::clone(&self.network);
        let mut occ = std::mem::take(&mut self.occupancy);
        occ.rebuild(&net, &self.vehicles);
        let t = self.time;

        // decisions on the pre-step snapshot, ascending id order
        // one draw per bot per step, in id order, keeps the stream aligned
        let draws: Vec<f64> = (0..self.vehicles.len())
            .map(|i| match self.vehicles[i].behavior {
                Behavior::Bot(_) => self.rng.gen(),
                _ => 0.0,
            })
            .collect();
        let mut decisions: Vec<Option<BotDecision>> = Vec::with_capacity(self.vehicles.len());
        for idx in 0..self.vehicles.len() {
            let d = match &self.vehicles[idx].behavior {
                Behavior::Bot(_) => Some(self.decide_bot(&net, &occ, idx, t, draws[idx])),
                _ => None,
            };
            decisions.push(d);
        }

        let mut despawn = vec![false; self.vehicles.len()];
        let mut red_crossings = Vec::new();
        let ego_params = self.ego_params;
        let weather = self.weather;
        for (idx, decision) in decisions.into_iter().enumerate() {
            let v = &mut self.vehicles[idx];
            match decision {
                Some(d) => {
                    if let Some(crossed) = advance_bot(&net, v, d, t, &mut despawn[idx]) {
                        red_crossings.push(crossed);
                    }
                }
                None => match &mut v.behavior {
                    Behavior::Ego { controls } => {
                        let c = *controls;
                        let state = BicycleState {
                            x: v.pose.x,
                            y: v.pose.y,
                            heading: v.pose.heading,
                            v: v.v,
                        };
                        let (n, a) = ego_step(&state, &c, &ego_params, &weather, DT);
                        v.pose = Pose { x: n.x, y: n.y, heading: n.heading };
                        v.v = n.v;
                        v.a = a;
                        v.brake_light = c.brake > 0.0;
                        let (lane, s, _) = net.nearest_lane(v.pose.position(), v.lane);
                        v.lane = Some(lane);
                        v.s = s;
                    }
                    Behavior::Path(p) => {
                        p.travelled += p.speed * DT;
                        if p.travelled >= p.path.length() {
                            despawn[idx] = true;
                        }
                        v.pose = p.path.pose_at(p.travelled);
                    }
                    Behavior::Bot(_) => unreachable!("bots always have a decision"),
                },
            }
        }

        if despawn.iter().any(|&d| d) {
            let mut i = 0;
            self.vehicles.retain(|_| {
                let keep = !despawn[i];
                i += 1;
                keep
            });
        }
        for idx in 0..self.vehicles.len() {
            if matches!(self.vehicles[idx].behavior, Behavior::Path(_)) {
                let mut v = self.vehicles[idx].clone();
                self.project_off_lane(&mut v);
                self.vehicles[idx] = v;
            }
        }

        self.step_index += 1;
        self.time = self.step_index as f64 * DT;

        for (vehicle, lane) in red_crossings {
            self.events.push(SimEvent::RedLightCrossing {
                time: self.time,
                vehicle,
                lane,
            });
        }

        occ.rebuild(&net, &self.vehicles);
        self.spawn_flows(&net, &mut occ);
        self.occupancy = occ;

        let found = detect_collisions(&self.vehicles, self.time, &mut self.contacts);
        for c in found {
            self.collisions.push(c.clone());
            self.events.push(SimEvent::Collision(c));
        }
    }

    fn project_off_lane(&self, v: &mut VehicleState) {
        let (lane, s, dist) = self.network.nearest_lane(v.pose.position(), v.lane);
        let on_road = dist <= self.network.lane(lane).width / 2.0 + v.width / 2.0;
        if on_road {
            v.lane = Some(lane);
            v.s = s;
        } else {
            v.lane = None;
            v.s = 0.0;
        }
    }

    fn spawn_flows(&mut self, net: &RoadNetwork, occ: &mut Occupancy) {
        for fi in 0..self.flows.len() {
            let u: f64 = self.rng.gen();
            let flow = &self.flows[fi];
            if u >= flow.rate * DT {
                continue;
            }
            let edge = net.edge(&flow.entry_edge).expect("validated");
            let pick: f64 = self.rng.gen();
            let lane = edge.lanes[((pick * edge.lanes.len() as f64) as usize).min(edge.lanes.len() - 1)];
            let params = flow.params;
            let (length, _) = AgentKind::BotCar.dims();
            let s = length / 2.0;
            let limit = net.lane(lane).speed_limit.min(params.desired_speed);
            let occupants = occ.on(lane);
            if occupants.iter().any(|o| o.s <= s) {
                continue;
            }
            let v0 = match occupants.first() {
                None => limit,
                Some(o) => {
                    let gap = o.s - o.half - (s + length / 2.0) - MIN_GAP;
                    if gap < 0.0 {
                        continue;
                    }
                    safe_speed(o.v, gap, limit, &params, self.weather.friction).min(limit)
                }
            };
            let n = self.flows[fi].spawned;
            let id = format!("{}.{:05}", self.flows[fi].id, n);
            let route = match &self.flows[fi].route {
                Some(r) => r.clone(),
                None => {
                    let entry = self.flows[fi].entry_edge.clone();
                    self.random_route(&entry, RANDOM_ROUTE_EDGES)
                }
            };
            let spawn = BotSpawn {
                id,
                lane: net.lane(lane).id.clone(),
                s,
                v0,
                route,
                params,
            };
            if self.add_bot(spawn).is_ok() {
                self.flows[fi].spawned += 1;
                occ.rebuild(net, &self.vehicles);
            }
        }
    }

    fn decide_bot(
        &self,
        net: &RoadNetwork,
        occ: &Occupancy,
        idx: usize,
        t: f64,
        u: f64,
    ) -> BotDecision {
        let v = &self.vehicles[idx];
        let bot = v.bot().expect("bot");
        let lane = v.lane.expect("bots are always on a lane");
        let friction = self.weather.friction;
        let p = &bot.params;

        let mut pending = bot.pending.clone();
        let mut start_change = None;
        let mut obstacle = self.leader_ahead(net, occ, idx, lane, v.s, t);

        if bot.lane_change.is_none() && !net.lane(lane).is_internal() {
            let sur = self.surroundings(net, occ, idx, lane, obstacle);
            match (requested_change(p, &sur), &pending) {
                (None, _) => pending = None,
                (Some(d), Some(pc)) if pc.direction == d => {
                    let waited = self.step_index - pc.since_step;
                    let lead_steps = (INDICATOR_LEAD_S * STEPS_PER_SECOND as f64).round() as u64;
                    let side = match d {
                        Direction::Left => sur.left,
                        Direction::Right => sur.right,
                    };
                    if waited >= lead_steps
                        && side.is_some_and(|tl| accepts(v.v, p, &tl, friction, DT))
                    {
                        let target = net
                            .neighbour_lane(lane, d.lane_offset())
                            .expect("side exists");
                        start_change = Some((d, target));
                        pending = None;
                    }
                }
                (Some(d), _) => {
                    pending = Some(PendingChange {
                        direction: d,
                        since_step: self.step_index,
                    })
                }
            }
        }

        if let Some((_, target)) = start_change {
            let s_target = v.s * net.lane(target).length() / net.lane(lane).length();
            let other = self.leader_ahead(net, occ, idx, target, s_target, t);
            obstacle = nearest(obstacle, other);
        } else if let Some(lc) = &bot.lane_change {
            let s_from = v.s * net.lane(lc.from_lane).length() / net.lane(lane).length();
            let other = self.leader_ahead(net, occ, idx, lc.from_lane, s_from, t);
            obstacle = nearest(obstacle, other);
        }

        let (v_safe, gap_cap) = match obstacle {
            Some(o) => {
                let gap = if o.vehicle { o.gap - MIN_GAP } else { o.gap }.max(0.0);
                (safe_speed(o.v, gap, v.v.max(0.0), p, friction), gap / DT)
            }
            None => (f64::INFINITY, f64::INFINITY),
        };
        let v_des = match bot.speed_override {
            Some(ov) => {
                let cap = if ov.target < v.v {
                    (v.v - ov.decel.unwrap_or(p.decel) * DT).max(ov.target)
                } else {
                    ov.target
                };
                let free = DriverParams {
                    desired_speed: f64::INFINITY,
                    ..*p
                };
                desired_speed(v.v, v_safe, cap, &free, DT)
            }
            None => desired_speed(v.v, v_safe, net.lane(lane).speed_limit, p, DT),
        };
        BotDecision {
            v_next: dawdle(v_des, p, DT, u),
            pending,
            start_change,
        }
        .with_cap(gap_cap)
    }

    /// Nearest obstacle ahead along the planned lane sequence: vehicles, stop
    /// lines at red or blocked junctions, and the end of a lane that does not
    /// continue along the route.
    fn leader_ahead(
        &self,
        net: &RoadNetwork,
        occ: &Occupancy,
        me: usize,
        lane: LaneIx,
        s: f64,
        t: f64,
    ) -> Option<Obstacle> {
        let v = &self.vehicles[me];
        let bot = v.bot().expect("bot");
        let half = v.length / 2.0;
        let speed = v.v.max(0.0);
        let p = &bot.params;
        let friction = self.weather.friction;
        let lookahead = speed * p.tau + speed * speed / (2.0 * p.decel * friction) + LOOKAHEAD_MARGIN_M;

        if let Some(o) = occ.ahead(lane, s, me) {
            return Some(Obstacle {
                gap: o.s - o.half - (s + half),
                v: o.v,
                vehicle: true,
            });
        }
        let mut offset = net.lane(lane).length() - s;
        let mut cur = lane;
        let mut route_pos = 0usize;
        loop {
            let hop = if let Some(c) = net.lane(cur).connection {
                Some(NextHop::Exit(net.connection(c).to_lane))
            } else {
                match bot.route.get(route_pos) {
                    None => return None,
                    Some(edge) => net.connection_to_edge(cur, edge).map(NextHop::Via),
                }
            };
            let stop_gap = offset - half;
            let next = match hop {
                None => {
                    return Some(Obstacle {
                        gap: stop_gap,
                        v: 0.0,
                        vehicle: false,
                    })
                }
                Some(NextHop::Exit(l)) => {
                    route_pos += 1;
                    l
                }
                Some(NextHop::Via(c)) => {
                    if !bot.ignore_signals
                        && stop_gap > 0.0
                        && self.junction_blocks(net, occ, me, c, stop_gap, speed, p, t)
                    {
                        return Some(Obstacle {
                            gap: stop_gap,
                            v: 0.0,
                            vehicle: false,
                        });
                    }
                    let conn = net.connection(c);
                    if conn.internal.is_none() {
                        route_pos += 1;
                    }
                    net.next_lane_via(c)
                }
            };
            if let Some(o) = occ.first(next, me) {
                return Some(Obstacle {
                    gap: offset + o.s - o.half - half,
                    v: o.v,
                    vehicle: true,
                });
            }
            offset += net.lane(next).length();
            cur = next;
            if offset > lookahead {
                return None;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn junction_blocks(
        &self,
        net: &RoadNetwork,
        occ: &Occupancy,
        me: usize,
        c: ConnIx,
        stop_gap: f64,
        speed: f64,
        p: &DriverParams,
        t: f64,
    ) -> bool {
        let conn = net.connection(c);
        if conn.signal.is_some() {
            let state = net.signal_state(c, t).unwrap_or(SignalState::Red);
            if red_light_as_leader(speed, stop_gap, state, p, self.weather.friction).is_some() {
                return true;
            }
        }
        for &f in &conn.foes {
            if let Some(il) = net.connection(f).internal {
                if occ.first(il, me).is_some() {
                    return true;
                }
            }
        }
        if conn.yields {
            for &f in &conn.foes {
                let foe = net.connection(f);
                if foe.yields {
                    continue;
                }
                let horizon = net.lane(foe.to_lane).speed_limit * YIELD_HORIZON_S;
                if self.priority_approaching(net, occ, me, foe.from_lane, 0.0, horizon, 0) {
                    return true;
                }
            }
        }
        if let Some(il) = conn.internal {
            let my_len = self.vehicles[me].length;
            if let Some(o) = occ.first(conn.to_lane, me) {
                if o.v < 1.0 && o.s - o.half < my_len + MIN_GAP + 1.0 {
                    return true;
                }
            }
            if occ.on(il).iter().any(|o| o.idx != me && o.v < 1.0) {
                return true;
            }
        }
        false
    }

    /// A vehicle on `lane` (or upstream of it) reaching the lane end within the
    /// yield horizon.
    #[allow(clippy::too_many_arguments)]
    fn priority_approaching(
        &self,
        net: &RoadNetwork,
        occ: &Occupancy,
        me: usize,
        lane: LaneIx,
        extra: f64,
        horizon: f64,
        depth: usize,
    ) -> bool {
        let len = net.lane(lane).length();
        for o in occ.on(lane) {
            if o.idx == me {
                continue;
            }
            let d = len - (o.s + o.half) + extra;
            if d < 0.0 {
                continue;
            }
            if d <= 3.0 || d / o.v.max(0.1) < YIELD_HORIZON_S {
                return true;
            }
        }
        let extra = extra + len;
        if extra >= horizon || depth >= 3 {
            return false;
        }
        net.incoming(lane).iter().any(|&ic| {
            let conn = net.connection(ic);
            let up = conn.internal.unwrap_or(conn.from_lane);
            let mut hit = self.priority_approaching(net, occ, me, up, extra, horizon, depth + 1);
            if !hit && conn.internal.is_some() {
                hit = self.priority_approaching(
                    net,
                    occ,
                    me,
                    conn.from_lane,
                    extra + net.lane(up).length(),
                    horizon,
                    depth + 1,
                );
            }
            hit
        })
    }

    fn surroundings(
        &self,
        net: &RoadNetwork,
        occ: &Occupancy,
        me: usize,
        lane: LaneIx,
        obstacle: Option<Obstacle>,
    ) -> Surroundings {
        let v = &self.vehicles[me];
        let bot = v.bot().expect("bot");
        let half = v.length / 2.0;
        let len = net.lane(lane).length();
        let next_edge = bot.route.front();
        let keeps_route = |l: LaneIx| next_edge.map_or(true, |e| net.connection_to_edge(l, e).is_some());

        let route_requires = if keeps_route(lane) {
            None
        } else {
            let mut found = None;
            for k in 1..8 {
                if net.neighbour_lane(lane, k).is_some_and(keeps_route) {
                    found = Some(Direction::Left);
                    break;
                }
                if net.neighbour_lane(lane, -k).is_some_and(keeps_route) {
                    found = Some(Direction::Right);
                    break;
                }
            }
            found
        };

        let side = |d: Direction| -> Option<TargetLane> {
            let target = net.neighbour_lane(lane, d.lane_offset())?;
            let tlen = net.lane(target).length();
            let s = v.s * tlen / len;
            let leader = occ.ahead(target, s, me).map(|o| Neighbor {
                gap: o.s - o.half - (s + half),
                v: o.v,
            });
            let follower = occ.behind(target, s, me).map(|o| {
                let other = &self.vehicles[o.idx];
                Follower {
                    gap: s - half - (o.s + o.half),
                    v: o.v,
                    params: other.bot().map_or_else(DriverParams::default, |b| b.params),
                }
            });
            Some(TargetLane {
                leader,
                follower,
                keeps_route: keeps_route(target),
                room: tlen - s - half >= v.v.max(0.0) * LANE_CHANGE_DURATION_S,
            })
        };

        Surroundings {
            leader: obstacle.filter(|o| o.vehicle).map(|o| Neighbor { gap: o.gap, v: o.v }),
            left: side(Direction::Left),
            right: side(Direction::Right),
            route_requires,
        }
    }
}

impl BotDecision {
    fn with_cap(mut self, gap_cap: f64) -> Self {
        self.v_next = self.v_next.min(gap_cap);
        self
    }
}

fn nearest(a: Option<Obstacle>, b: Option<Obstacle>) -> Option<Obstacle> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.gap < x.gap { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Apply a bot decision: lane-change bookkeeping, integration, lane
/// transitions. Returns a red-light crossing if one happened.
fn advance_bot(
    net: &RoadNetwork,
    v: &mut VehicleState,
    d: BotDecision,
    t: f64,
    despawn: &mut bool,
) -> Option<(String, String)> {
    let half = v.length / 2.0;
    let mut lane = v.lane.expect("bot lane");
    let Behavior::Bot(bot) = &mut v.behavior else {
        unreachable!()
    };
    bot.pending = d.pending;
    if let Some((direction, target)) = d.start_change {
        let ratio = net.lane(target).length() / net.lane(lane).length();
        bot.lane_change = Some(LaneChangeMotion {
            from_lane: lane,
            direction,
            progress: 0.0,
            duration: LANE_CHANGE_DURATION_S,
        });
        v.s *= ratio;
        lane = target;
    }

    let v_old = v.v;
    v.v = d.v_next;
    v.a = (v.v - v_old) / DT;
    let old_front = v.s + half;
    v.s += v.v * DT;

    let mut crossing = None;
    let len = net.lane(lane).length();
    if !net.lane(lane).is_internal() && old_front <= len && v.s + half > len {
        if let Some(NextHop::Via(c)) = planned_next(net, lane, &bot.route) {
            if net.signal_state(c, t) == Ok(SignalState::Red) {
                crossing = Some((v.id.clone(), net.lane(lane).id.clone()));
            }
        }
    }

    if let Some(lc) = &mut bot.lane_change {
        lc.progress += DT / lc.duration;
        if lc.progress >= 1.0 {
            bot.lane_change = None;
        }
    }

    while v.s > net.lane(lane).length() {
        let Some(hop) = planned_next(net, lane, &bot.route) else {
            *despawn = true;
            break;
        };
        v.s -= net.lane(lane).length();
        bot.prev_lane = Some(lane);
        bot.lane_change = None;
        lane = net.next_lane_via_or_lane(hop);
        if !net.lane(lane).is_internal() {
            bot.route.pop_front();
        }
    }
    v.lane = Some(lane);
    let s = v.s.min(net.lane(lane).length());
    v.pose = match &bot.lane_change {
        Some(lc) => {
            let from = net.lane(lc.from_lane);
            let target = net.lane(lane);
            let p_from = from.shape.pose_at(s * from.length() / target.length());
            let p_to = target.shape.pose_at(s);
            let k = lc.progress * lc.progress * (3.0 - 2.0 * lc.progress);
            let pos = p_from.position().lerp(p_to.position(), k);
            Pose {
                x: pos.x,
                y: pos.y,
                heading: p_to.heading,
            }
        }
        None => net.lane(lane).shape.pose_at(s),
    };
    v.brake_light = v.a < BRAKE_LIGHT_DECEL;
    v.indicator = match (&bot.lane_change, &bot.pending) {
        (Some(lc), _) => lc.direction.indicator(),
        (None, Some(pc)) => pc.direction.indicator(),
        (None, None) => Indicator::Off,
    };
    crossing
}
