use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use proptest::prelude::*;

use precrash_core::config::DT;
use precrash_core::datalog::MemorySink;
use precrash_core::scenario::{
    randomize_order, run_scenario, scenario_files, Action, DefensiveEgo, EgoController, EndReason,
    LoadedScenario, NoopEgo, RunOutcome, ScenarioError, ScenarioRun, ScenarioSpec, EGO_ID,
    MAX_DURATION_S, MIN_DURATION_S, SCENARIO_IDS,
};
use precrash_core::traffic::{AgentKind, Controls};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenarios")
}

fn load(id: &str) -> LoadedScenario {
    LoadedScenario::from_file(&scenario_dir().join(format!("{id}.scenario.json"))).unwrap()
}

fn bundled() -> Vec<LoadedScenario> {
    scenario_files(&scenario_dir())
        .unwrap()
        .iter()
        .map(|p| LoadedScenario::from_file(p).unwrap())
        .collect()
}

fn run_with(sc: &LoadedScenario, seed: u64, ego: &mut dyn EgoController) -> (RunOutcome, Vec<String>) {
    let mut sink = MemorySink::default();
    let out = run_scenario(sc, seed, ego, &mut sink).unwrap();
    (out, sink.lines)
}

fn fired_triggers(lines: &[String]) -> Vec<String> {
    lines
        .iter()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["rec"] == "evt" && v["type"] == "trigger_fired")
        .map(|v| v["detail"]["trigger"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn bundled_set_is_exactly_the_nine() {
    let ids: BTreeSet<String> = bundled().into_iter().map(|s| s.spec.id).collect();
    let mut want: BTreeSet<String> = SCENARIO_IDS.iter().map(|s| s.to_string()).collect();
    want.insert("practice".into());
    assert_eq!(ids, want);
}

#[test]
fn durations_in_band() {
    for sc in bundled() {
        let d = sc.spec.duration_s;
        assert!((MIN_DURATION_S..=MAX_DURATION_S).contains(&d), "{}: {d}", sc.spec.id);
    }
}

#[test]
fn practice_has_only_the_ego_and_ambient_flow() {
    let sc = load("practice");
    assert!(sc.spec.is_practice());
    assert!(sc.spec.actors.is_empty());
    assert!(!sc.spec.flows.is_empty());
    let world = sc.build_world(1).unwrap();
    let ids: Vec<&str> = world.vehicles().iter().map(|v| v.id.as_str()).collect();
    assert_eq!(ids, [EGO_ID]);
}

#[test]
fn practice_noop_runs_to_duration() {
    let sc = load("practice");
    let (out, _) = run_with(&sc, 4, &mut NoopEgo);
    assert!(!out.collided);
    assert_eq!(out.end_reason.as_deref(), Some(EndReason::Duration.as_str()));
    assert!((out.duration - sc.spec.duration_s).abs() < 1e-9);
}

#[test]
fn red_light_runner_is_armed() {
    let sc = load("red_light_runner");
    let world = sc.build_world(1).unwrap();
    let runners: Vec<&String> = sc
        .spec
        .triggers
        .iter()
        .flat_map(|t| &t.actions)
        .filter_map(|a| match a {
            Action::RunRedLight { actor } => Some(actor),
            _ => None,
        })
        .collect();
    assert_eq!(runners.len(), 1);
    let runner = world.vehicle(runners[0]).expect("adversary spawned");
    assert_eq!(runner.kind, AgentKind::BotCar);
    // it approaches a signalled junction
    let net = world.network();
    let lane = runner.lane.unwrap();
    assert!(net
        .outgoing(lane)
        .iter()
        .any(|&c| net.connection(c).signal.is_some()));

    let run = ScenarioRun::new(sc.clone(), 1).unwrap();
    assert_eq!(run.world().step_index(), 0);
    assert!(run.ended().is_none());
}

#[test]
fn overlapping_spawns_rejected() {
    let sc = load("sudden_stop");
    let mut spec: ScenarioSpec = sc.spec.clone();
    spec.actors[0].s = Some(spec.ego.s + 1.0);
    assert!(matches!(
        LoadedScenario::new(spec, sc.network.clone()),
        Err(ScenarioError::Validation(_))
    ));
}

#[test]
fn sudden_stop_lead_halts_in_time() {
    let sc = load("sudden_stop");
    let decel = sc.spec.triggers[0]
        .actions
        .iter()
        .find_map(|a| match a {
            Action::HardStop { decel, .. } => Some(*decel),
            _ => None,
        })
        .unwrap();
    let mut run = ScenarioRun::new(sc, 2).unwrap();
    let mut fired_at = None;
    while run.ended().is_none() {
        let recs = run.step(Controls::default());
        let lead = run.world().vehicle("lead").unwrap();
        if let Some((t0, v0)) = fired_at {
            if lead.v == 0.0 {
                let elapsed = run.world().time() - t0;
                assert!(elapsed <= v0 / decel + 1e-9, "stopped after {elapsed} s from {v0} m/s");
                return;
            }
            assert!(run.world().time() - t0 <= v0 / decel + 1e-9, "still moving at {}", lead.v);
        } else if recs.events.iter().any(|e| e.kind == "trigger_fired") {
            fired_at = Some((run.world().time(), lead.v));
        }
    }
    panic!("trigger never fired or lead never stopped");
}

#[test]
fn bundled_runs_fire_each_trigger_once() {
    for sc in bundled() {
        let mut egos: [Box<dyn EgoController>; 2] = [Box::new(NoopEgo), Box::new(DefensiveEgo::default())];
        for ego in egos.iter_mut() {
            let (out, lines) = run_with(&sc, 1, ego.as_mut());
            let fired = fired_triggers(&lines);
            let unique: BTreeSet<&String> = fired.iter().collect();
            assert_eq!(unique.len(), fired.len(), "{}: {fired:?}", sc.spec.id);
            assert_eq!(out.triggers_fired, fired);
            if !sc.spec.is_practice() && ego.name() == "noop" {
                assert!(!fired.is_empty(), "{} fired nothing", sc.spec.id);
            }
            if let Some(rt) = out.reaction_time {
                let k = (rt / DT).round();
                assert!(rt >= 0.0 && (rt - k * DT).abs() < 1e-9, "{}: {rt}", sc.spec.id);
            }
            if let Some(ttc) = out.min_ttc {
                assert!(ttc > 0.0);
            }
        }
    }
}

#[test]
fn outcome_is_a_function_of_seed_and_controls() {
    let sc = load("t_bone");
    for seed in [1, 2] {
        let a = run_with(&sc, seed, &mut DefensiveEgo::default()).0;
        let b = run_with(&sc, seed, &mut DefensiveEgo::default()).0;
        assert_eq!(a, b);
    }
}

#[test]
fn first_place_is_close_to_uniform() {
    let mut first: BTreeMap<&str, u32> = BTreeMap::new();
    let n = 10_000;
    for seed in 0..n {
        *first.entry(randomize_order(seed, &SCENARIO_IDS).unwrap()[0]).or_default() += 1;
    }
    assert_eq!(first.len(), 8);
    for (id, c) in first {
        let share = c as f64 / n as f64;
        assert!((0.095..=0.155).contains(&share), "{id}: {share}");
    }
}

proptest! {
    #[test]
    fn order_is_a_permutation(seed in any::<u64>()) {
        let order = randomize_order(seed, &SCENARIO_IDS).unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        let mut want = SCENARIO_IDS.to_vec();
        want.sort();
        prop_assert_eq!(sorted, want);
        prop_assert_eq!(order, randomize_order(seed, &SCENARIO_IDS).unwrap());
    }
}
