use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EGO_ID;
use crate::config::{DT, REACTION_BRAKE_THRESHOLD};
use crate::datalog::{FcdFrame, LogEvent};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OutcomeError {
    #[error("log contains no frames")]
    EmptyLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionInfo {
    pub time: f64,
    pub parties: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub scenario_id: String,
    /// Ego involved in at least one collision.
    pub collided: bool,
    /// First ego collision.
    pub collision: Option<CollisionInfo>,
    pub min_ttc: Option<f64>,
    pub reaction_time: Option<f64>,
    pub first_trigger_time: Option<f64>,
    pub triggers_fired: Vec<String>,
    pub mean_ego_speed: f64,
    pub reached_goal: bool,
    pub end_reason: Option<String>,
    pub duration: f64,
}

/// Builds a [`RunOutcome`] from a stream of steps and events, so live runs
/// and log files share one definition.
#[derive(Debug, Clone)]
pub struct OutcomeTracker {
    scenario_id: String,
    frames: u64,
    last_t: f64,
    ego_speed_sum: f64,
    ego_frames: u64,
    min_ttc: Option<f64>,
    brake_steps: Vec<u64>,
    first_trigger: Option<(u64, f64)>,
    triggers: Vec<String>,
    collision: Option<CollisionInfo>,
    end_reason: Option<String>,
}

impl OutcomeTracker {
    pub fn new(scenario_id: &str) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            frames: 0,
            last_t: 0.0,
            ego_speed_sum: 0.0,
            ego_frames: 0,
            min_ttc: None,
            brake_steps: Vec::new(),
            first_trigger: None,
            triggers: Vec::new(),
            collision: None,
            end_reason: None,
        }
    }

    /// All frames of one step.
    pub fn observe_step(&mut self, frames: &[FcdFrame]) {
        self.frames += frames.len() as u64;
        let Some(ego) = frames.iter().find(|f| f.vehicle_id == EGO_ID) else {
            if let Some(f) = frames.last() {
                self.last_t = f.t;
            }
            return;
        };
        self.last_t = ego.t;
        self.ego_speed_sum += ego.v;
        self.ego_frames += 1;
        if ego.brake.is_some_and(|b| b > REACTION_BRAKE_THRESHOLD) {
            self.brake_steps.push(ego.step_index);
        }
        let Some(lane) = &ego.lane_id else { return };
        let ego_half = ego.kind.dims().0 / 2.0;
        for f in frames {
            if f.vehicle_id == EGO_ID || f.lane_id.as_ref() != Some(lane) || f.s <= ego.s {
                continue;
            }
            let gap = f.s - ego.s - ego_half - f.kind.dims().0 / 2.0;
            let closing = ego.v - f.v;
            if gap > 0.0 && closing > 0.0 {
                let ttc = gap / closing;
                if self.min_ttc.is_none_or(|m| ttc < m) {
                    self.min_ttc = Some(ttc);
                }
            }
        }
    }

    pub fn observe_event(&mut self, e: &LogEvent) {
        match e.kind.as_str() {
            "trigger_fired" => {
                if self.first_trigger.is_none() {
                    self.first_trigger = Some((e.step_index, e.t));
                }
                if let Some(id) = e.detail.get("trigger").and_then(|v| v.as_str()) {
                    self.triggers.push(id.to_string());
                }
            }
            "collision" if self.collision.is_none() => {
                let a = e.detail.get("id_a").and_then(|v| v.as_str()).unwrap_or_default();
                let b = e.detail.get("id_b").and_then(|v| v.as_str()).unwrap_or_default();
                if a == EGO_ID || b == EGO_ID {
                    self.collision = Some(CollisionInfo {
                        time: e.t,
                        parties: [a.to_string(), b.to_string()],
                    });
                }
            }
            "scenario_end" => {
                self.end_reason = e
                    .detail
                    .get("reason")
                    .and_then(|v| v.as_str())
                    .map(str::to_string);
            }
            _ => {}
        }
    }

    pub fn finish(&self) -> Result<RunOutcome, OutcomeError> {
        if self.frames == 0 {
            return Err(OutcomeError::EmptyLog);
        }
        let reaction_time = self.first_trigger.and_then(|(k, _)| {
            self.brake_steps
                .iter()
                .find(|&&s| s >= k)
                .map(|&s| (s - k) as f64 * DT)
        });
        Ok(RunOutcome {
            scenario_id: self.scenario_id.clone(),
            collided: self.collision.is_some(),
            collision: self.collision.clone(),
            min_ttc: self.min_ttc,
            reaction_time,
            first_trigger_time: self.first_trigger.map(|(_, t)| t),
            triggers_fired: self.triggers.clone(),
            mean_ego_speed: if self.ego_frames == 0 {
                0.0
            } else {
                self.ego_speed_sum / self.ego_frames as f64
            },
            reached_goal: self.end_reason.as_deref() == Some("goal_reached"),
            end_reason: self.end_reason.clone(),
            duration: self.last_t,
        })
    }
}

/// Outcome of a complete logged run. Frames must be ordered by step.
pub fn compute_outcome(
    scenario_id: &str,
    frames: &[FcdFrame],
    events: &[LogEvent],
) -> Result<RunOutcome, OutcomeError> {
    let mut tracker = OutcomeTracker::new(scenario_id);
    for step in frames.chunk_by(|a, b| a.step_index == b.step_index) {
        tracker.observe_step(step);
    }
    for e in events {
        tracker.observe_event(e);
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{AgentKind, Gear, Indicator};
    use serde_json::json;

    fn frame(step: u64, id: &str, s: f64, v: f64, brake: f64) -> FcdFrame {
        let ego = id == EGO_ID;
        FcdFrame {
            t: step as f64 * DT,
            step_index: step,
            vehicle_id: id.into(),
            kind: if ego { AgentKind::EgoCar } else { AgentKind::BotCar },
            x: s,
            y: 0.0,
            heading: 0.0,
            v,
            a: 0.0,
            lane_id: Some("e_0".into()),
            s,
            throttle: ego.then_some(0.0),
            brake: ego.then_some(brake),
            steer: ego.then_some(0.0),
            gear: ego.then_some(Gear::D),
            brake_light: false,
            indicator: Indicator::Off,
            gaze_x: None,
            gaze_y: None,
            eye_openness: None,
            blink: None,
        }
    }

    fn trigger(step: u64) -> LogEvent {
        LogEvent {
            t: step as f64 * DT,
            step_index: step,
            kind: "trigger_fired".into(),
            detail: json!({"trigger": "go"}),
        }
    }

    fn ego_run(brake_at: Option<u64>) -> Vec<FcdFrame> {
        (1..=1000)
            .map(|k| frame(k, EGO_ID, k as f64, 10.0, if brake_at.is_some_and(|b| k >= b) { 0.5 } else { 0.0 }))
            .collect()
    }

    #[test]
    fn empty_log() {
        assert_eq!(compute_outcome("x", &[], &[]), Err(OutcomeError::EmptyLog));
    }

    #[test]
    fn reaction_hand_built() {
        // trigger at 10.00 s, first brake at 10.84 s
        let o = compute_outcome("x", &ego_run(Some(542)), &[trigger(500)]).unwrap();
        assert!((o.reaction_time.unwrap() - 0.84).abs() < 1e-12);
        assert_eq!(o.first_trigger_time, Some(10.0));
    }

    #[test]
    fn reaction_zero_and_none() {
        let o = compute_outcome("x", &ego_run(Some(500)), &[trigger(500)]).unwrap();
        assert_eq!(o.reaction_time, Some(0.0));
        let o = compute_outcome("x", &ego_run(None), &[trigger(500)]).unwrap();
        assert_eq!(o.reaction_time, None);
        // braking only before the trigger does not count
        let mut frames = ego_run(None);
        frames[10].brake = Some(1.0);
        assert_eq!(compute_outcome("x", &frames, &[trigger(500)]).unwrap().reaction_time, None);
    }

    #[test]
    fn ttc_same_lane_closing_only() {
        let frames = vec![
            frame(1, "a", 40.0, 4.0, 0.0),
            frame(1, EGO_ID, 10.0, 10.0, 0.0),
            frame(1, "z", 5.0, 0.0, 0.0),
        ];
        let o = compute_outcome("x", &frames, &[]).unwrap();
        // gap 40 - 10 - 4.5 = 25.5 at closing 6
        assert!((o.min_ttc.unwrap() - 25.5 / 6.0).abs() < 1e-12);
        let mut other_lane = frames.clone();
        other_lane[0].lane_id = Some("e_1".into());
        assert_eq!(compute_outcome("x", &other_lane, &[]).unwrap().min_ttc, None);
        let mut opening = frames;
        opening[0].v = 12.0;
        assert_eq!(compute_outcome("x", &opening, &[]).unwrap().min_ttc, None);
    }

    #[test]
    fn only_ego_collisions_count() {
        let c = |a: &str, b: &str| LogEvent {
            t: 1.0,
            step_index: 50,
            kind: "collision".into(),
            detail: json!({"id_a": a, "id_b": b, "time": 1.0, "x": 0.0, "y": 0.0}),
        };
        let frames = ego_run(None);
        assert!(!compute_outcome("x", &frames, &[c("a", "b")]).unwrap().collided);
        let o = compute_outcome("x", &frames, &[c("a", "b"), c("bot", EGO_ID)]).unwrap();
        assert!(o.collided);
        assert_eq!(o.collision.unwrap().parties, ["bot".to_string(), EGO_ID.to_string()]);
        assert!((o.mean_ego_speed - 10.0).abs() < 1e-12);
        assert!((o.duration - 20.0).abs() < 1e-12);
    }
}
