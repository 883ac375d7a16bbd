use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::{
    Connection, Edge, LaneIx, Lane, NetworkError, Node, Phase, RoadNetwork, SignalProgram,
    SignalRef, SignalState, NETWORK_FORMAT_VERSION,
};
use crate::config::DEFAULT_LANE_WIDTH;
use crate::geometry::{Polyline, Vec2};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    format_version: u32,
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    #[serde(default)]
    connections: Vec<RawConnection>,
    #[serde(default)]
    signals: Vec<RawSignal>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    id: String,
    from: String,
    to: String,
    speed_limit: f64,
    lanes: Vec<RawLane>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLane {
    #[serde(default)]
    index: Option<usize>,
    #[serde(default)]
    width: Option<f64>,
    shape: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    from_lane: String,
    to_lane: String,
    via: String,
    #[serde(default)]
    signal: Option<RawSignalRef>,
    #[serde(default, rename = "yield")]
    yields: bool,
    #[serde(default)]
    shape: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignalRef {
    program: String,
    link: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    id: String,
    #[serde(default)]
    offset: f64,
    phases: Vec<RawPhase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    duration: f64,
    state: String,
}

fn point(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn geometry(id: &str, reason: impl Into<String>) -> NetworkError {
    NetworkError::InvalidGeometry {
        id: id.to_string(),
        reason: reason.into(),
    }
}

fn bad_signal(id: &str, reason: impl Into<String>) -> NetworkError {
    NetworkError::InvalidSignal {
        id: id.to_string(),
        reason: reason.into(),
    }
}

/// Parse and validate a `.net.json` document.
///
/// Lane ids are derived as `<edge>_<index>`. Every referential invariant is
/// checked here, so a returned network never holds dangling ids.
pub fn parse_network(text: &str) -> Result<RoadNetwork, NetworkError> {
    let raw: RawNetwork = serde_json::from_str(text).map_err(|e| NetworkError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.format_version != NETWORK_FORMAT_VERSION {
        return Err(NetworkError::UnsupportedVersion(raw.format_version));
    }

    let mut nodes = BTreeMap::new();
    for n in raw.nodes {
        if !(n.x.is_finite() && n.y.is_finite()) {
            return Err(geometry(&n.id, "non-finite position"));
        }
        let id = n.id.clone();
        let node = Node {
            id: n.id,
            position: Vec2::new(n.x, n.y),
        };
        if nodes.insert(id.clone(), node).is_some() {
            return Err(NetworkError::DuplicateId(id));
        }
    }

    if raw.edges.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }

    let mut edges = BTreeMap::new();
    let mut lanes: Vec<Lane> = Vec::new();
    let mut lane_ids: BTreeMap<String, LaneIx> = BTreeMap::new();
    for e in raw.edges {
        for node in [&e.from, &e.to] {
            if !nodes.contains_key(node) {
                return Err(NetworkError::DanglingReference(node.clone()));
            }
        }
        if edges.contains_key(&e.id) {
            return Err(NetworkError::DuplicateId(e.id));
        }
        if !(e.speed_limit > 0.0 && e.speed_limit.is_finite()) {
            return Err(geometry(&e.id, "speed limit must be positive"));
        }
        if e.lanes.is_empty() {
            return Err(geometry(&e.id, "edge has no lanes"));
        }
        let mut ordered: Vec<(usize, RawLane)> = Vec::with_capacity(e.lanes.len());
        for (pos, lane) in e.lanes.into_iter().enumerate() {
            ordered.push((lane.index.unwrap_or(pos), lane));
        }
        ordered.sort_by_key(|(i, _)| *i);
        for (expected, (i, _)) in ordered.iter().enumerate() {
            if *i != expected {
                return Err(geometry(&e.id, "lane indices must be contiguous from 0"));
            }
        }
        let mut edge_lanes = Vec::with_capacity(ordered.len());
        for (index, lane) in ordered {
            let id = format!("{}_{}", e.id, index);
            let width = lane.width.unwrap_or(DEFAULT_LANE_WIDTH);
            if !(width > 0.0 && width.is_finite()) {
                return Err(geometry(&id, "width must be positive"));
            }
            if lane.shape.iter().flatten().any(|c| !c.is_finite()) {
                return Err(geometry(&id, "non-finite coordinate"));
            }
            let shape = Polyline::new(lane.shape.into_iter().map(point).collect())
                .ok_or_else(|| geometry(&id, "needs at least two distinct consecutive points"))?;
            let ix = LaneIx(lanes.len() as u32);
            if lane_ids.insert(id.clone(), ix).is_some() {
                return Err(NetworkError::DuplicateId(id));
            }
            lanes.push(Lane {
                id,
                edge: Some(e.id.clone()),
                index,
                width,
                speed_limit: e.speed_limit,
                shape,
                connection: None,
            });
            edge_lanes.push(ix);
        }
        edges.insert(
            e.id.clone(),
            Edge {
                id: e.id,
                from_node: e.from,
                to_node: e.to,
                speed_limit: e.speed_limit,
                lanes: edge_lanes,
            },
        );
    }

    let mut signals = BTreeMap::new();
    for s in raw.signals {
        if s.phases.is_empty() {
            return Err(bad_signal(&s.id, "no phases"));
        }
        if !s.offset.is_finite() {
            return Err(bad_signal(&s.id, "non-finite offset"));
        }
        let mut phases = Vec::with_capacity(s.phases.len());
        for p in &s.phases {
            if !(p.duration > 0.0 && p.duration.is_finite()) {
                return Err(bad_signal(&s.id, "phase durations must be positive"));
            }
            let states = p
                .state
                .chars()
                .map(SignalState::from_char)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad_signal(&s.id, format!("bad state string `{}`", p.state)))?;
            phases.push(Phase {
                states,
                duration: p.duration,
            });
        }
        let links = phases[0].states.len();
        if links == 0 || phases.iter().any(|p| p.states.len() != links) {
            return Err(bad_signal(&s.id, "every phase must control the same links"));
        }
        let id = s.id.clone();
        let program = SignalProgram {
            id: s.id,
            phases,
            offset: s.offset,
        };
        if signals.insert(id.clone(), program).is_some() {
            return Err(NetworkError::DuplicateId(id));
        }
    }

    let mut connections = Vec::with_capacity(raw.connections.len());
    let mut seen = BTreeSet::new();
    for c in raw.connections {
        let from_lane = *lane_ids
            .get(&c.from_lane)
            .ok_or_else(|| NetworkError::DanglingReference(c.from_lane.clone()))?;
        let to_lane = *lane_ids
            .get(&c.to_lane)
            .ok_or_else(|| NetworkError::DanglingReference(c.to_lane.clone()))?;
        if !nodes.contains_key(&c.via) {
            return Err(NetworkError::DanglingReference(c.via));
        }
        if !seen.insert((from_lane, to_lane)) {
            return Err(NetworkError::DuplicateId(format!("{}->{}", c.from_lane, c.to_lane)));
        }
        let signal = match c.signal {
            Some(r) => {
                let program = signals
                    .get(&r.program)
                    .ok_or_else(|| NetworkError::DanglingReference(r.program.clone()))?;
                if r.link >= program.link_count() {
                    return Err(NetworkError::DanglingReference(format!(
                        "{}[{}]",
                        r.program, r.link
                    )));
                }
                Some(SignalRef {
                    program: r.program,
                    link: r.link,
                })
            }
            None => None,
        };
        if c.shape.iter().flatten().any(|v| !v.is_finite()) {
            return Err(geometry(&c.from_lane, "non-finite connection shape"));
        }
        let shape: Vec<Vec2> = c.shape.into_iter().map(point).collect();
        let start = lanes[from_lane.0 as usize].shape.last();
        let end = lanes[to_lane.0 as usize].shape.first();
        if start.dist(end) > 1e-6 {
            let mut pts = vec![start];
            pts.extend(shape.iter().copied());
            pts.push(end);
            if Polyline::new(pts).is_none() {
                return Err(geometry(
                    &format!("{}->{}", c.from_lane, c.to_lane),
                    "junction path has a zero-length segment",
                ));
            }
        }
        connections.push(Connection {
            from_lane,
            to_lane,
            via_node: c.via,
            signal,
            yields: c.yields,
            shape,
            internal: None,
            foes: Vec::new(),
        });
    }

    Ok(RoadNetwork::assemble(nodes, edges, lanes, connections, signals))
}
