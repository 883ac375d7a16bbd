use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{LoadedScenario, OutcomeError, OutcomeTracker, RunOutcome, ScenarioError, EGO_ID};
use crate::config::{COLLISION_GRACE_S, CONTACT_EPS, DT, STEPS_PER_SECOND};
use crate::datalog::{FcdFrame, LogError, LogEvent, LogHeader, LogRecord, LogSink, LOG_FORMAT_VERSION};
use crate::geometry::{OrientedRect, Pose};
use crate::traffic::{Controls, SimEvent, VehicleState, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    GoalReached,
    Collision,
    Duration,
    EndRun,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::GoalReached => "goal_reached",
            EndReason::Collision => "collision",
            EndReason::Duration => "duration",
            EndReason::EndRun => "end_run",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

/// Anything that produces ego inputs once per step.
pub trait EgoController {
    /// Label written to the log header.
    fn name(&self) -> &str;
    fn controls(&mut self, world: &WorldState) -> Controls;
}

/// Zero inputs: the ego coasts at its spawn speed.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoopEgo;

impl EgoController for NoopEgo {
    fn name(&self) -> &str {
        "noop"
    }

    fn controls(&mut self, _: &WorldState) -> Controls {
        Controls::default()
    }
}

/// Full brake whenever any agent, extrapolated at constant velocity, would
/// touch the ego within the horizon.
#[derive(Debug, Clone, Copy)]
pub struct DefensiveEgo {
    pub horizon: f64,
}

impl Default for DefensiveEgo {
    fn default() -> Self {
        Self { horizon: 2.0 }
    }
}

fn advance(v: &VehicleState, tau: f64) -> OrientedRect {
    let p = v.pose;
    let d = v.v * tau;
    let pose = Pose {
        x: p.x + d * p.heading.cos(),
        y: p.y + d * p.heading.sin(),
        heading: p.heading,
    };
    OrientedRect::new(pose, v.length, v.width)
}

impl DefensiveEgo {
    /// Earliest predicted contact time, if any within the horizon.
    pub fn time_to_conflict(&self, world: &WorldState) -> Option<f64> {
        let ego = world.vehicle(EGO_ID)?;
        let samples = (self.horizon / DT).round() as u64;
        let reach = |v: &VehicleState| v.v.abs() * self.horizon + v.length;
        world
            .vehicles()
            .iter()
            .filter(|o| o.id != EGO_ID)
            .filter(|o| o.pose.position().dist(ego.pose.position()) <= reach(ego) + reach(o))
            .filter_map(|o| {
                (0..=samples)
                    .map(|k| k as f64 * DT)
                    .find(|&tau| advance(ego, tau).overlaps(&advance(o, tau), CONTACT_EPS))
            })
            .min_by(f64::total_cmp)
    }
}

impl EgoController for DefensiveEgo {
    fn name(&self) -> &str {
        "defensive"
    }

    fn controls(&mut self, world: &WorldState) -> Controls {
        match self.time_to_conflict(world) {
            Some(_) => Controls::full_brake(),
            None => Controls::default(),
        }
    }
}

/// Feeds back recorded inputs, indexed by the step about to be taken.
#[derive(Debug, Clone, Default)]
pub struct ReplayEgo {
    pub controls: Vec<Controls>,
}

impl EgoController for ReplayEgo {
    fn name(&self) -> &str {
        "replay"
    }

    fn controls(&mut self, world: &WorldState) -> Controls {
        self.controls
            .get(world.step_index() as usize)
            .copied()
            .unwrap_or_default()
    }
}

/// What one step produced, in log order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecords {
    pub frames: Vec<FcdFrame>,
    pub events: Vec<LogEvent>,
}

impl StepRecords {
    pub fn records(&self) -> impl Iterator<Item = LogRecord> + '_ {
        self.frames
            .iter()
            .cloned()
            .map(LogRecord::Fcd)
            .chain(self.events.iter().cloned().map(LogRecord::Evt))
    }
}

/// A scenario in progress: world, trigger state and outcome bookkeeping.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    scenario: LoadedScenario,
    seed: u64,
    world: WorldState,
    fired: Vec<bool>,
    tracker: OutcomeTracker,
    ego_collision_step: Option<u64>,
    ended: Option<EndReason>,
}

impl ScenarioRun {
    pub fn new(scenario: LoadedScenario, seed: u64) -> Result<Self, ScenarioError> {
        let world = scenario.build_world(seed)?;
        Ok(Self {
            fired: vec![false; scenario.spec.triggers.len()],
            tracker: OutcomeTracker::new(&scenario.spec.id),
            scenario,
            seed,
            world,
            ego_collision_step: None,
            ended: None,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn scenario(&self) -> &LoadedScenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    pub fn header(&self, ego: &str, started_at: Option<u64>) -> LogHeader {
        LogHeader {
            format_version: LOG_FORMAT_VERSION,
            scenario_id: self.scenario.spec.id.clone(),
            scenario_file: self.scenario.file_label(),
            network_file: self.scenario.spec.network_file.clone(),
            seed: self.seed,
            dt: DT,
            ego: ego.to_string(),
            started_at,
        }
    }

    fn event(&self, kind: &str, detail: serde_json::Value) -> LogEvent {
        LogEvent {
            t: self.world.time(),
            step_index: self.world.step_index(),
            kind: kind.to_string(),
            detail,
        }
    }

    /// Advance one step with `controls`. A finished run yields nothing.
    pub fn step(&mut self, controls: Controls) -> StepRecords {
        if self.ended.is_some() {
            return StepRecords::default();
        }
        self.world.set_controls(EGO_ID, controls);
        self.world.step();

        let mut events = Vec::new();
        for e in self.world.drain_events() {
            match e {
                SimEvent::Collision(c) => {
                    if self.ego_collision_step.is_none() && (c.id_a == EGO_ID || c.id_b == EGO_ID) {
                        self.ego_collision_step = Some(self.world.step_index());
                    }
                    let detail = serde_json::to_value(&c).expect("collision serializes");
                    events.push(self.event("collision", detail));
                }
                SimEvent::RedLightCrossing { vehicle, lane, .. } => {
                    events.push(self.event(
                        "red_light_crossing",
                        json!({"vehicle": vehicle, "lane": lane}),
                    ));
                }
            }
        }

        // conditions see the post-motion state; actions apply before the next step
        let due: Vec<usize> = (0..self.fired.len())
            .filter(|&i| !self.fired[i] && self.scenario.spec.triggers[i].condition.holds(&self.world))
            .collect();
        for i in due {
            self.fired[i] = true;
            let rule = self.scenario.spec.triggers[i].clone();
            events.push(self.event("trigger_fired", json!({"trigger": rule.id})));
            for skipped in rule.apply(&mut self.world) {
                events.push(self.event("action_skipped", skipped));
            }
        }

        let frames = FcdFrame::snapshot(&self.world);
        let k = self.world.step_index();
        let ego_pos = self.world.vehicle(EGO_ID).map(|v| v.pose.position());
        let grace = (COLLISION_GRACE_S * STEPS_PER_SECOND as f64).round() as u64;
        let reason = if self
            .ego_collision_step
            .is_some_and(|c| k >= c + grace)
        {
            Some(EndReason::Collision)
        } else if self.ego_collision_step.is_none()
            && self
                .scenario
                .spec
                .goal_region
                .zip(ego_pos)
                .is_some_and(|(g, p)| g.contains(p))
        {
            Some(EndReason::GoalReached)
        } else if k >= self.scenario.spec.duration_steps() {
            Some(EndReason::Duration)
        } else {
            None
        };
        if let Some(r) = reason {
            events.push(self.finish_event(r));
        }

        self.tracker.observe_step(&frames);
        for e in &events {
            self.tracker.observe_event(e);
        }
        StepRecords { frames, events }
    }

    fn finish_event(&mut self, reason: EndReason) -> LogEvent {
        self.ended = Some(reason);
        self.event("scenario_end", json!({"reason": reason.as_str()}))
    }

    /// Stop early on request. Returns the `scenario_end` event unless the run
    /// already ended.
    pub fn end_run(&mut self) -> Option<LogEvent> {
        if self.ended.is_some() {
            return None;
        }
        let e = self.finish_event(EndReason::EndRun);
        self.tracker.observe_event(&e);
        Some(e)
    }

    pub fn outcome(&self) -> Result<RunOutcome, OutcomeError> {
        self.tracker.finish()
    }
}

fn unix_now() -> Option<u64> {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

/// Run to completion, streaming every record into `sink`.
pub fn run_scenario(
    scenario: &LoadedScenario,
    seed: u64,
    ego: &mut dyn EgoController,
    sink: &mut dyn LogSink,
) -> Result<RunOutcome, RunError> {
    let mut run = ScenarioRun::new(scenario.clone(), seed)?;
    sink.record(&LogRecord::Hdr(run.header(ego.name(), unix_now())))?;
    while run.ended().is_none() {
        let c = ego.controls(run.world());
        let recs = run.step(c);
        for r in recs.records() {
            sink.record(&r)?;
        }
        if run.world().step_index() % STEPS_PER_SECOND == 0 {
            sink.flush()?;
        }
    }
    sink.flush()?;
    Ok(run.outcome()?)
}
