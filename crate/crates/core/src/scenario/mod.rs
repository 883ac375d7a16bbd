//! Scenario files, trigger rules, run orchestration and outcome metrics.

mod order;
mod outcome;
mod run;
mod trigger;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{OrientedRect, Vec2};
use crate::network::{parse_network, NetworkError, RoadNetwork};
use crate::traffic::{AgentKind, BotSpawn, DriverParams, Flow, SpawnError, Weather, WorldState};

pub use order::{randomize_order, OrderError, SCENARIO_IDS};
pub use outcome::{compute_outcome, CollisionInfo, OutcomeError, OutcomeTracker, RunOutcome};
pub use run::{
    run_scenario, DefensiveEgo, EgoController, EndReason, NoopEgo, ReplayEgo, RunError,
    ScenarioRun, StepRecords,
};
pub use trigger::{Action, Condition, TriggerRule};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;
pub const EGO_ID: &str = "ego";
pub const MIN_DURATION_S: f64 = 60.0;
pub const MAX_DURATION_S: f64 = 180.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported scenario format version {0}")]
    UnsupportedVersion(u32),
    #[error("network {path}: {source}")]
    Network {
        path: PathBuf,
        source: NetworkError,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSpawn {
    pub lane: String,
    pub s: f64,
    pub v0: f64,
    #[serde(default)]
    pub route: Vec<String>,
}

/// A scripted participant: a bot car on a lane, or a pedestrian/deer on a
/// path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpawn {
    pub id: String,
    pub kind: AgentKind,
    #[serde(default)]
    pub lane: Option<String>,
    #[serde(default)]
    pub s: Option<f64>,
    pub v0: f64,
    #[serde(default)]
    pub route: Vec<String>,
    #[serde(default)]
    pub params: DriverParams,
    #[serde(default)]
    pub path: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: String,
    pub entry_edge: String,
    /// Vehicles per second.
    pub rate: f64,
    #[serde(default)]
    pub route: Option<Vec<String>>,
    #[serde(default)]
    pub params: DriverParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Region {
    pub fn contains(&self, p: Vec2) -> bool {
        p.dist(Vec2::new(self.center[0], self.center[1])) <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub format_version: u32,
    pub id: String,
    pub title: String,
    /// Relative to the scenario file.
    pub network_file: String,
    pub duration_s: f64,
    #[serde(default)]
    pub weather: Weather,
    pub ego: EgoSpawn,
    #[serde(default)]
    pub actors: Vec<ActorSpawn>,
    #[serde(default)]
    pub flows: Vec<FlowSpec>,
    #[serde(default)]
    pub triggers: Vec<TriggerRule>,
    #[serde(default)]
    pub goal_region: Option<Region>,
}

impl ScenarioSpec {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if spec.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::UnsupportedVersion(spec.format_version));
        }
        Ok(spec)
    }

    pub fn duration_steps(&self) -> u64 {
        (self.duration_s * crate::config::STEPS_PER_SECOND as f64).round() as u64
    }

    pub fn is_practice(&self) -> bool {
        self.triggers.is_empty()
    }

    /// Checks that need no network.
    fn validate_shallow(&self) -> Result<(), ScenarioError> {
        if !(MIN_DURATION_S..=MAX_DURATION_S).contains(&self.duration_s) {
            return Err(invalid(format!(
                "duration_s {} outside [{MIN_DURATION_S}, {MAX_DURATION_S}]",
                self.duration_s
            )));
        }
        let w = self.weather;
        if !(w.friction > 0.0 && w.friction <= 1.0) || !(w.visibility >= 0.0) {
            return Err(invalid("weather out of range"));
        }
        let mut ids = BTreeSet::from([EGO_ID.to_string()]);
        for a in &self.actors {
            if !ids.insert(a.id.clone()) {
                return Err(invalid(format!("duplicate agent id `{}`", a.id)));
            }
            if a.kind == AgentKind::EgoCar {
                return Err(invalid(format!("actor `{}` cannot be an ego", a.id)));
            }
        }
        for f in &self.flows {
            if !ids.insert(f.id.clone()) {
                return Err(invalid(format!("flow id `{}` clashes with another id", f.id)));
            }
        }
        let mut triggers = BTreeSet::new();
        for t in &self.triggers {
            if !triggers.insert(t.id.as_str()) {
                return Err(invalid(format!("duplicate trigger id `{}`", t.id)));
            }
            t.validate(&ids)?;
        }
        if let Some(g) = &self.goal_region {
            if !(g.radius > 0.0) {
                return Err(invalid("goal radius must be positive"));
            }
        }
        Ok(())
    }
}

/// A validated scenario with its network.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub spec: ScenarioSpec,
    pub network: Arc<RoadNetwork>,
    pub path: Option<PathBuf>,
    pub network_path: PathBuf,
}

impl LoadedScenario {
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = ScenarioSpec::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let network_path = dir.join(&spec.network_file);
        let net_text =
            std::fs::read_to_string(&network_path).map_err(|source| ScenarioError::Io {
                path: network_path.clone(),
                source,
            })?;
        let network = parse_network(&net_text).map_err(|source| ScenarioError::Network {
            path: network_path.clone(),
            source,
        })?;
        let mut loaded = Self::new(spec, Arc::new(network))?;
        loaded.path = Some(path.to_path_buf());
        loaded.network_path = network_path;
        Ok(loaded)
    }

    /// Validate `spec` against an already parsed network.
    pub fn new(spec: ScenarioSpec, network: Arc<RoadNetwork>) -> Result<Self, ScenarioError> {
        spec.validate_shallow()?;
        let loaded = Self {
            network_path: PathBuf::from(&spec.network_file),
            spec,
            network,
            path: None,
        };
        // building the world runs every lane/edge/overlap check
        loaded.build_world(0)?;
        Ok(loaded)
    }

    /// Fresh world at time 0 with ego, actors and flows in place.
    pub fn build_world(&self, seed: u64) -> Result<WorldState, ScenarioError> {
        let spec = &self.spec;
        let net = &self.network;
        let mut world = WorldState::new(Arc::clone(net), seed, spec.weather);
        let spawn_err = |who: &str, e: SpawnError| invalid(format!("{who}: {e}"));

        for e in &spec.ego.route {
            if net.edge(e).is_none() {
                return Err(invalid(format!("ego route: unknown edge `{e}`")));
            }
        }
        world
            .add_ego(EGO_ID, &spec.ego.lane, spec.ego.s, spec.ego.v0)
            .map_err(|e| spawn_err(EGO_ID, e))?;
        for a in &spec.actors {
            match a.kind {
                AgentKind::BotCar => {
                    let (Some(lane), Some(s)) = (&a.lane, a.s) else {
                        return Err(invalid(format!("bot `{}` needs lane and s", a.id)));
                    };
                    world
                        .add_bot(BotSpawn {
                            id: a.id.clone(),
                            lane: lane.clone(),
                            s,
                            v0: a.v0,
                            route: a.route.clone(),
                            params: a.params,
                        })
                        .map_err(|e| spawn_err(&a.id, e))?;
                }
                AgentKind::Pedestrian | AgentKind::Deer => {
                    let Some(path) = &a.path else {
                        return Err(invalid(format!("`{}` needs a path", a.id)));
                    };
                    let pts = path.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                    world
                        .add_path_agent(&a.id, a.kind, pts, a.v0)
                        .map_err(|e| spawn_err(&a.id, e))?;
                }
                AgentKind::EgoCar => unreachable!("rejected by validation"),
            }
        }
        for f in &spec.flows {
            world
                .add_flow(Flow {
                    id: f.id.clone(),
                    entry_edge: f.entry_edge.clone(),
                    rate: f.rate,
                    route: f.route.clone(),
                    params: f.params,
                    spawned: 0,
                })
                .map_err(|e| spawn_err(&f.id, e))?;
        }
        let rects: Vec<(String, OrientedRect)> = world
            .vehicles()
            .iter()
            .map(|v| (v.id.clone(), v.rect()))
            .collect();
        for (i, (a, ra)) in rects.iter().enumerate() {
            for (b, rb) in &rects[i + 1..] {
                if ra.overlaps(rb, crate::config::CONTACT_EPS) {
                    return Err(invalid(format!("spawns of `{a}` and `{b}` overlap")));
                }
            }
        }
        Ok(world)
    }

    /// Path recorded in log headers.
    pub fn file_label(&self) -> String {
        self.path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| format!("{}.scenario.json", self.spec.id))
    }
}

/// Every `*.scenario.json` in a directory, sorted by file name.
pub fn scenario_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".scenario.json"))
        })
        .collect();
    out.sort();
    Ok(out)
}
