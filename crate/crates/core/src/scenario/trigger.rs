use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{invalid, Region, ScenarioError, EGO_ID};
use crate::geometry::Vec2;
use crate::traffic::{AgentKind, Direction, SpeedOverride, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    EgoInRegion { center: [f64; 2], radius: f64 },
    /// Bumper-to-bumper distance (centre distance minus half lengths).
    EgoGapBelow { actor: String, gap: f64 },
    TimeElapsed { t: f64 },
    EgoSpeedAbove { v: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    SetSpeed {
        actor: String,
        v: f64,
        #[serde(default)]
        decel: Option<f64>,
    },
    ForceLaneChange { actor: String, direction: Direction },
    RunRedLight { actor: String },
    HardStop { actor: String, decel: f64 },
    SpawnAgent {
        #[serde(default)]
        id: Option<String>,
        kind: AgentKind,
        path: Vec<[f64; 2]>,
        v: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerRule {
    pub id: String,
    pub condition: Condition,
    pub actions: Vec<Action>,
}

impl Condition {
    /// Pure read of the world.
    pub fn holds(&self, world: &WorldState) -> bool {
        let Some(ego) = world.vehicle(EGO_ID) else {
            return false;
        };
        match self {
            Condition::EgoInRegion { center, radius } => Region {
                center: *center,
                radius: *radius,
            }
            .contains(ego.pose.position()),
            Condition::EgoGapBelow { actor, gap } => world.vehicle(actor).is_some_and(|a| {
                let d = a.pose.position().dist(ego.pose.position());
                d - a.length / 2.0 - ego.length / 2.0 < *gap
            }),
            Condition::TimeElapsed { t } => world.time() >= *t - 1e-9,
            Condition::EgoSpeedAbove { v } => ego.v > *v,
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl TriggerRule {
    pub(super) fn validate(&self, ids: &BTreeSet<String>) -> Result<(), ScenarioError> {
        let ctx = |m: &str| invalid(format!("trigger `{}`: {m}", self.id));
        let known = |a: &String| {
            if ids.contains(a) && a != EGO_ID {
                Ok(())
            } else {
                Err(ctx(&format!("unknown actor `{a}`")))
            }
        };
        match &self.condition {
            Condition::EgoInRegion { radius, .. } if !positive(*radius) => {
                return Err(ctx("radius must be positive"))
            }
            Condition::EgoGapBelow { actor, gap } => {
                known(actor)?;
                if !gap.is_finite() {
                    return Err(ctx("gap must be finite"));
                }
            }
            Condition::TimeElapsed { t } if !(t.is_finite() && *t >= 0.0) => {
                return Err(ctx("time must be non-negative"))
            }
            _ => {}
        }
        for a in &self.actions {
            match a {
                Action::SetSpeed { actor, v, decel } => {
                    known(actor)?;
                    if !(v.is_finite() && *v >= 0.0) || decel.is_some_and(|d| !positive(d)) {
                        return Err(ctx("bad set_speed values"));
                    }
                }
                Action::ForceLaneChange { actor, .. } | Action::RunRedLight { actor } => {
                    known(actor)?
                }
                Action::HardStop { actor, decel } => {
                    known(actor)?;
                    if !positive(*decel) {
                        return Err(ctx("hard_stop decel must be positive"));
                    }
                }
                Action::SpawnAgent { kind, path, v, .. } => {
                    if !matches!(kind, AgentKind::Pedestrian | AgentKind::Deer) {
                        return Err(ctx("spawn_agent kind must be pedestrian or deer"));
                    }
                    if path.len() < 2 || !(v.is_finite() && *v >= 0.0) {
                        return Err(ctx("spawn_agent needs a path and a speed"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Apply every action in order. Returns one `detail` object per action
    /// that could not be carried out.
    pub fn apply(&self, world: &mut WorldState) -> Vec<Value> {
        let mut skipped = Vec::new();
        for (i, action) in self.actions.iter().enumerate() {
            let ok = match action {
                Action::SetSpeed { actor, v, decel } => world.set_speed_override(
                    actor,
                    SpeedOverride {
                        target: *v,
                        decel: *decel,
                    },
                ),
                Action::ForceLaneChange { actor, direction } => {
                    world.force_lane_change(actor, *direction)
                }
                Action::RunRedLight { actor } => world.set_ignore_signals(actor),
                Action::HardStop { actor, decel } => world.set_speed_override(
                    actor,
                    SpeedOverride {
                        target: 0.0,
                        decel: Some(*decel),
                    },
                ),
                Action::SpawnAgent { id, kind, path, v } => {
                    let id = id.clone().unwrap_or_else(|| format!("{}.{i}", self.id));
                    let pts = path.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                    world.add_path_agent(&id, *kind, pts, *v).is_ok()
                }
            };
            if !ok {
                skipped.push(json!({
                    "trigger": self.id,
                    "action": i,
                    "reason": "unknown_actor",
                }));
            }
        }
        skipped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use crate::traffic::{BotSpawn, DriverParams, Weather};
    use std::sync::Arc;

    fn world() -> WorldState {
        let net = parse_network(
            r#"{"format_version": 1,
                "nodes": [{"id": "a", "x": 0, "y": 0}, {"id": "b", "x": 1000, "y": 0}],
                "edges": [{"id": "e", "from": "a", "to": "b", "speed_limit": 30,
                           "lanes": [{"shape": [[0, 0], [1000, 0]]}]}]}"#,
        )
        .unwrap();
        let mut w = WorldState::new(Arc::new(net), 3, Weather::default());
        w.add_ego(EGO_ID, "e_0", 0.0, 0.0).unwrap();
        w
    }

    #[test]
    fn region_boundary_inside() {
        let w = world();
        let c = |r| Condition::EgoInRegion {
            center: [9.9, 0.0],
            radius: r,
        };
        assert!(c(10.0).holds(&w));
        assert!(!c(9.8).holds(&w));
    }

    #[test]
    fn time_threshold_fires_on_the_exact_step() {
        let mut w = world();
        let c = Condition::TimeElapsed { t: 30.0 };
        for _ in 0..1499 {
            w.step();
        }
        assert!((w.time() - 29.98).abs() < 1e-12);
        assert!(!c.holds(&w));
        w.step();
        assert!(c.holds(&w));
    }

    #[test]
    fn gap_uses_bumpers() {
        let mut w = world();
        w.add_bot(BotSpawn {
            id: "lead".into(),
            lane: "e_0".into(),
            s: 30.0,
            v0: 0.0,
            route: vec![],
            params: DriverParams::default(),
        })
        .unwrap();
        // centre distance 30, bumper gap 25.5
        let below = |g| Condition::EgoGapBelow { actor: "lead".into(), gap: g }.holds(&w);
        assert!(below(25.6));
        assert!(!below(25.5));
        assert!(!Condition::EgoGapBelow { actor: "ghost".into(), gap: 1e9 }.holds(&w));
    }

    #[test]
    fn missing_actor_is_reported_not_fatal() {
        let mut w = world();
        let rule = TriggerRule {
            id: "t".into(),
            condition: Condition::TimeElapsed { t: 0.0 },
            actions: vec![
                Action::HardStop { actor: "ghost".into(), decel: 8.0 },
                Action::SpawnAgent {
                    id: None,
                    kind: AgentKind::Deer,
                    path: vec![[50.0, -10.0], [50.0, 10.0]],
                    v: 3.0,
                },
            ],
        };
        let skipped = rule.apply(&mut w);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0]["action"], 0);
        assert!(w.vehicle("t.1").is_some());
    }
}
