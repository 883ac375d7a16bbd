//! Static road environment: nodes, edges with lanes, junction connections and
//! fixed-time signal programs.
//!
//! Connections whose end points do not coincide get a junction-internal lane
//! (id `:<node>_<n>`) that vehicles drive through like any other lane.

mod parse;
mod route;
mod signal;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{Polyline, Pose, Vec2};

pub use parse::parse_network;
pub use signal::{Phase, SignalProgram, SignalState};

pub const NETWORK_FORMAT_VERSION: u32 = 1;

/// Connections whose internal lanes pass closer than this are conflicting.
const FOE_DISTANCE: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct LaneIx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ConnIx(pub u32);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported network format version {0}")]
    UnsupportedVersion(u32),
    #[error("dangling reference to `{0}`")]
    DanglingReference(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("network has no edges")]
    EmptyNetwork,
    #[error("invalid geometry for `{id}`: {reason}")]
    InvalidGeometry { id: String, reason: String },
    #[error("invalid signal program `{id}`: {reason}")]
    InvalidSignal { id: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LookupError {
    #[error("unknown lane `{0}`")]
    UnknownLane(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("no path from `{from}` to `{to}`")]
    NoPath { from: String, to: String },
    #[error("connection {0} is not controlled by a signal program")]
    UnknownConnection(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub speed_limit: f64,
    /// Lanes ordered by index, 0 = rightmost.
    pub lanes: Vec<LaneIx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    /// `None` for junction-internal lanes.
    pub edge: Option<String>,
    pub index: usize,
    pub width: f64,
    pub speed_limit: f64,
    pub shape: Polyline,
    /// Set for junction-internal lanes.
    pub connection: Option<ConnIx>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.shape.length()
    }

    pub fn is_internal(&self) -> bool {
        self.edge.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalRef {
    pub program: String,
    pub link: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub from_lane: LaneIx,
    pub to_lane: LaneIx,
    pub via_node: String,
    pub signal: Option<SignalRef>,
    /// Unsignalised minor movement that gives way to its foes.
    pub yields: bool,
    /// Intermediate points of the junction path (excluding both end points).
    pub shape: Vec<Vec2>,
    pub internal: Option<LaneIx>,
    /// Connections from other lanes that merge into the same lane or whose
    /// junction paths cross this one.
    pub foes: Vec<ConnIx>,
}

fn junction_path(start: Vec2, via: &[Vec2], end: Vec2) -> Polyline {
    let mut pts = vec![start];
    pts.extend(via.iter().copied());
    pts.push(end);
    Polyline::new(pts).expect("junction path validated at parse time")
}

/// Immutable road network. Safe to share between threads.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    connections: Vec<Connection>,
    signals: BTreeMap<String, SignalProgram>,
    lanes: Vec<Lane>,
    lane_ids: BTreeMap<String, LaneIx>,
    outgoing: Vec<Vec<ConnIx>>,
    incoming: Vec<Vec<ConnIx>>,
}

impl RoadNetwork {
    pub(crate) fn assemble(
        nodes: BTreeMap<String, Node>,
        edges: BTreeMap<String, Edge>,
        mut lanes: Vec<Lane>,
        mut connections: Vec<Connection>,
        signals: BTreeMap<String, SignalProgram>,
    ) -> Self {
        // junction-internal lanes
        let mut per_node: BTreeMap<String, usize> = BTreeMap::new();
        for (ci, conn) in connections.iter_mut().enumerate() {
            let start = lanes[conn.from_lane.0 as usize].shape.last();
            let end = lanes[conn.to_lane.0 as usize].shape.first();
            if start.dist(end) <= 1e-6 {
                continue;
            }
            let n = per_node.entry(conn.via_node.clone()).or_default();
            let id = format!(":{}_{}", conn.via_node, *n);
            *n += 1;
            let to = &lanes[conn.to_lane.0 as usize];
            let lane = Lane {
                id,
                edge: None,
                index: 0,
                width: to.width,
                speed_limit: to.speed_limit,
                shape: junction_path(start, &conn.shape, end),
                connection: Some(ConnIx(ci as u32)),
            };
            conn.internal = Some(LaneIx(lanes.len() as u32));
            lanes.push(lane);
        }

        let n = connections.len();
        for a in 0..n {
            let mut foes = Vec::new();
            for b in 0..n {
                if a == b {
                    continue;
                }
                let (ca, cb) = (&connections[a], &connections[b]);
                if ca.via_node != cb.via_node || ca.from_lane == cb.from_lane {
                    continue;
                }
                let merge = ca.to_lane == cb.to_lane;
                let cross = match (ca.internal, cb.internal) {
                    (Some(ia), Some(ib)) => {
                        lanes[ia.0 as usize].shape.min_distance(&lanes[ib.0 as usize].shape)
                            < FOE_DISTANCE
                    }
                    _ => false,
                };
                if merge || cross {
                    foes.push(ConnIx(b as u32));
                }
            }
            connections[a].foes = foes;
        }

        let mut outgoing = vec![Vec::new(); lanes.len()];
        let mut incoming = vec![Vec::new(); lanes.len()];
        for (ci, conn) in connections.iter().enumerate() {
            outgoing[conn.from_lane.0 as usize].push(ConnIx(ci as u32));
            incoming[conn.to_lane.0 as usize].push(ConnIx(ci as u32));
        }
        for list in &mut outgoing {
            list.sort_by_key(|c| connections[c.0 as usize].to_lane);
        }
        let lane_ids = lanes
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), LaneIx(i as u32)))
            .collect();
        Self {
            nodes,
            edges,
            connections,
            signals,
            lanes,
            lane_ids,
            outgoing,
            incoming,
        }
    }

    pub fn nodes(&self) -> &BTreeMap<String, Node> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<String, Edge> {
        &self.edges
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn connection(&self, c: ConnIx) -> &Connection {
        &self.connections[c.0 as usize]
    }

    pub fn signals(&self) -> &BTreeMap<String, SignalProgram> {
        &self.signals
    }

    pub fn lanes(&self) -> impl Iterator<Item = (LaneIx, &Lane)> {
        self.lanes.iter().enumerate().map(|(i, l)| (LaneIx(i as u32), l))
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn lane(&self, ix: LaneIx) -> &Lane {
        &self.lanes[ix.0 as usize]
    }

    pub fn lane_ix(&self, id: &str) -> Option<LaneIx> {
        self.lane_ids.get(id).copied()
    }

    pub fn lane_by_id(&self, id: &str) -> Result<&Lane, LookupError> {
        self.lane_ix(id)
            .map(|ix| self.lane(ix))
            .ok_or_else(|| LookupError::UnknownLane(id.to_string()))
    }

    pub fn outgoing(&self, lane: LaneIx) -> &[ConnIx] {
        &self.outgoing[lane.0 as usize]
    }

    pub fn incoming(&self, lane: LaneIx) -> &[ConnIx] {
        &self.incoming[lane.0 as usize]
    }

    /// Lane entered after leaving `lane` through connection `c`.
    pub fn next_lane_via(&self, c: ConnIx) -> LaneIx {
        let conn = self.connection(c);
        conn.internal.unwrap_or(conn.to_lane)
    }

    /// Connection from `lane` into edge `edge`, lowest target lane first.
    pub fn connection_to_edge(&self, lane: LaneIx, edge: &str) -> Option<ConnIx> {
        self.outgoing(lane)
            .iter()
            .copied()
            .find(|&c| self.lane(self.connection(c).to_lane).edge.as_deref() == Some(edge))
    }

    /// Lane `index` of the same edge, if it exists.
    pub fn neighbour_lane(&self, lane: LaneIx, offset: i32) -> Option<LaneIx> {
        let l = self.lane(lane);
        let edge = self.edges.get(l.edge.as_deref()?)?;
        let idx = l.index as i64 + offset as i64;
        if idx < 0 {
            return None;
        }
        edge.lanes.get(idx as usize).copied()
    }

    /// Representative length of an edge (its rightmost lane).
    pub fn edge_length(&self, edge: &Edge) -> f64 {
        self.lane(edge.lanes[0]).length()
    }

    /// World pose at arc length `s` on a lane.
    pub fn locate(&self, lane_id: &str, s: f64) -> Result<Pose, LookupError> {
        let lane = self.lane_by_id(lane_id)?;
        let length = lane.length();
        if !(0.0..=length).contains(&s) {
            return Err(LookupError::OutOfRange { s, length });
        }
        Ok(lane.shape.pose_at(s))
    }

    /// Signal state of the connection at time `t`; uncontrolled connections
    /// are an error.
    pub fn signal_state(&self, c: ConnIx, t: f64) -> Result<SignalState, LookupError> {
        let conn = self
            .connections
            .get(c.0 as usize)
            .ok_or_else(|| LookupError::UnknownConnection(format!("#{}", c.0)))?;
        let unknown = || {
            LookupError::UnknownConnection(format!(
                "{}->{}",
                self.lane(conn.from_lane).id,
                self.lane(conn.to_lane).id
            ))
        };
        let sref = conn.signal.as_ref().ok_or_else(unknown)?;
        self.signals
            .get(&sref.program)
            .and_then(|p| p.state(sref.link, t))
            .ok_or_else(unknown)
    }

    /// Nearest lane to a point; ties keep `prefer` when given, then the lowest
    /// lane index.
    pub fn nearest_lane(&self, p: Vec2, prefer: Option<LaneIx>) -> (LaneIx, f64, f64) {
        let mut best: Option<(LaneIx, f64, f64)> = prefer.map(|ix| {
            let pr = self.lane(ix).shape.project(p);
            (ix, pr.s, pr.distance)
        });
        for (ix, lane) in self.lanes() {
            let pr = lane.shape.project(p);
            match best {
                Some((_, _, d)) if pr.distance >= d => {}
                _ => best = Some((ix, pr.s, pr.distance)),
            }
        }
        best.expect("network has lanes")
    }
}
