use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use serde_json::json;

use precrash_core::network::{parse_network, ConnIx, LookupError, RoadNetwork};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/networks")
}

fn fixture(name: &str) -> RoadNetwork {
    let text = std::fs::read_to_string(fixture_dir().join(format!("{name}.net.json"))).unwrap();
    parse_network(&text).unwrap()
}

fn path_cost(net: &RoadNetwork, path: &[String]) -> f64 {
    path.iter().map(|e| net.travel_time(e).unwrap()).sum()
}

/// All simple edge paths from `from` to `to`, by depth-first enumeration.
fn all_paths(net: &RoadNetwork, from: &str, to: &str) -> Vec<Vec<String>> {
    fn go(net: &RoadNetwork, path: &mut Vec<String>, to: &str, out: &mut Vec<Vec<String>>) {
        let last = path.last().unwrap().clone();
        if last == to {
            out.push(path.clone());
            return;
        }
        for next in net.successor_edges(&last) {
            if !path.iter().any(|e| e == next) {
                path.push(next.to_string());
                go(net, path, to, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, &mut vec![from.to_string()], to, &mut out);
    out
}

fn assert_chain(net: &RoadNetwork, path: &[String]) {
    for w in path.windows(2) {
        assert!(
            net.successor_edges(&w[0]).contains(&w[1].as_str()),
            "{} does not lead to {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn every_bundled_network_parses() {
    let mut n = 0;
    for entry in std::fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        let net = parse_network(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!net.edges().is_empty());
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn roundabout_counts() {
    let net = fixture("roundabout");
    assert_eq!(net.nodes().len(), 12);
    assert_eq!(net.edges().len(), 16);
    assert_eq!(net.connections().len(), 16);
    assert!(net.signals().is_empty());
}

#[test]
fn diamond_prefers_the_faster_upper_path() {
    let net = fixture("diamond");
    let got = net.route("in", "out").unwrap();
    assert_eq!(got, ["in", "up1", "up2", "out"]);

    let paths = all_paths(&net, "in", "out");
    assert!(paths.len() >= 2);
    let best = paths
        .iter()
        .min_by(|a, b| path_cost(&net, a).total_cmp(&path_cost(&net, b)))
        .unwrap();
    assert_eq!(&got, best);
}

#[test]
fn route_identity_and_no_path() {
    let net = fixture("diamond");
    assert_eq!(net.route("up1", "up1").unwrap(), ["up1"]);
    assert!(matches!(
        net.route("out", "in"),
        Err(LookupError::NoPath { .. })
    ));
    assert!(matches!(
        net.route("in", "island"),
        Err(LookupError::NoPath { .. })
    ));
    assert_eq!(
        net.route("in", "nowhere"),
        Err(LookupError::UnknownEdge("nowhere".into()))
    );
}

#[test]
fn routes_on_bundled_networks_are_chains() {
    for name in ["grid", "roundabout", "t_bone", "ramp_merge"] {
        let net = fixture(name);
        let ids: Vec<&String> = net.edges().keys().collect();
        for from in ids.iter().step_by(3) {
            for to in ids.iter().step_by(2) {
                if let Ok(path) = net.route(from, to) {
                    assert_eq!(path.first(), Some(*from));
                    assert_eq!(path.last(), Some(*to));
                    assert_chain(&net, &path);
                }
            }
        }
    }
}

#[test]
fn grid_signals_repeat_each_cycle() {
    let net = fixture("grid");
    let signalled: Vec<(ConnIx, f64)> = (0..net.connections().len() as u32)
        .map(ConnIx)
        .filter_map(|c| {
            let s = net.connection(c).signal.as_ref()?;
            Some((c, net.signals()[&s.program].cycle()))
        })
        .collect();
    assert!(!signalled.is_empty());
    for &(c, cycle) in &signalled {
        for k in 0..600 {
            let t = k as f64 * 0.37 + 0.013;
            assert_eq!(
                net.signal_state(c, t).unwrap(),
                net.signal_state(c, t + cycle).unwrap(),
                "t={t}"
            );
        }
    }
}

/// A small random graph: nodes on a circle, up to 8 straight one-lane edges,
/// and every turn at a shared node connected.
fn random_network(n_nodes: usize, edges: &[(usize, usize, f64)]) -> serde_json::Value {
    let pos = |i: usize| {
        let a = i as f64 * std::f64::consts::TAU / n_nodes as f64;
        [100.0 * a.cos(), 100.0 * a.sin()]
    };
    let nodes: Vec<_> = (0..n_nodes)
        .map(|i| json!({"id": format!("n{i}"), "x": pos(i)[0], "y": pos(i)[1]}))
        .collect();
    let edge_json: Vec<_> = edges
        .iter()
        .enumerate()
        .map(|(k, &(a, b, v))| {
            json!({
                "id": format!("e{k}"), "from": format!("n{a}"), "to": format!("n{b}"),
                "speed_limit": v, "lanes": [{"shape": [pos(a), pos(b)]}]
            })
        })
        .collect();
    let mut conns = Vec::new();
    for (i, &(_, b, _)) in edges.iter().enumerate() {
        for (j, &(c, _, _)) in edges.iter().enumerate() {
            if i != j && b == c {
                conns.push(json!({
                    "from_lane": format!("e{i}_0"), "to_lane": format!("e{j}_0"), "via": format!("n{b}")
                }));
            }
        }
    }
    json!({"format_version": 1, "nodes": nodes, "edges": edge_json, "connections": conns})
}

fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (3usize..6).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 5.0f64..40.0).prop_filter("no loops", |(a, b, _)| a != b);
        (Just(n), prop::collection::vec(edge, 1..=8))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn route_matches_exhaustive_minimum((n, edges) in graph(), from in 0usize..8, to in 0usize..8) {
        let doc = random_network(n, &edges).to_string();
        let net = parse_network(&doc).unwrap();
        let from = format!("e{}", from % edges.len());
        let to = format!("e{}", to % edges.len());
        let paths = all_paths(&net, &from, &to);
        match net.route(&from, &to) {
            Ok(path) => {
                prop_assert_eq!(path.first(), Some(&from));
                prop_assert_eq!(path.last(), Some(&to));
                assert_chain(&net, &path);
                let best = paths.iter().map(|p| path_cost(&net, p)).fold(f64::INFINITY, f64::min);
                prop_assert!((path_cost(&net, &path) - best).abs() <= 1e-9 * best.max(1.0));
            }
            Err(LookupError::NoPath { .. }) => prop_assert!(paths.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn parse_never_panics_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let _ = parse_network(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn parse_never_panics_on_mutated_fixture(cut in 0usize..4000, insert in "[\\[\\]{}\",:0-9a-z.-]{0,6}") {
        let text = std::fs::read_to_string(fixture_dir().join("diamond.net.json")).unwrap();
        let cut = cut.min(text.len());
        let cut = (0..=cut).rev().find(|&i| text.is_char_boundary(i)).unwrap();
        let mutated = format!("{}{}{}", &text[..cut], insert, &text[cut..]);
        let _ = parse_network(&mutated);
    }

    #[test]
    fn locate_is_continuous(lane_pick in any::<prop::sample::Index>(), frac in 0.0f64..1.0, eps in 0.0f64..0.5) {
        let net = fixture("roundabout");
        let lanes: Vec<_> = net.lanes().map(|(_, l)| l.id.clone()).collect();
        let id = &lanes[lane_pick.index(lanes.len())];
        let len = net.lane_by_id(id).unwrap().length();
        let s = frac * (len - eps).max(0.0);
        let a = net.locate(id, s).unwrap();
        let b = net.locate(id, (s + eps).min(len)).unwrap();
        let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
        prop_assert!(d <= eps * (1.0 + 1e-9) + 1e-12, "moved {d} for eps {eps}");
    }

    #[test]
    fn signal_is_periodic(t in 0.0f64..10_000.0, cycles in 1u32..20) {
        let net = fixture("grid");
        let names: BTreeSet<&String> = net.signals().keys().collect();
        for c in (0..net.connections().len() as u32).map(ConnIx) {
            let Some(sig) = net.connection(c).signal.as_ref() else { continue };
            prop_assert!(names.contains(&sig.program));
            let cycle = net.signals()[&sig.program].cycle();
            let phase = t.rem_euclid(cycle);
            // skip instants within rounding distance of a phase boundary
            let mut acc = 0.0;
            let near = net.signals()[&sig.program].phases.iter().any(|p| {
                acc += p.duration;
                (phase - acc).abs() < 1e-6 || phase < 1e-6
            });
            if near { continue; }
            prop_assert_eq!(
                net.signal_state(c, t).unwrap(),
                net.signal_state(c, t + cycles as f64 * cycle).unwrap()
            );
        }
    }
}
