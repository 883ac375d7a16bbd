use precrash_analysis::{decide, paired_t_test, welch_t_test};
use serde::Deserialize;

#[derive(Deserialize)]
struct Expected {
    t: f64,
    df: f64,
    p: f64,
}

#[derive(Deserialize)]
struct Case {
    a: Vec<f64>,
    b: Vec<f64>,
    paired_b: Vec<f64>,
    welch: Expected,
    paired: Expected,
}

#[derive(Deserialize)]
struct Oracle {
    cases: Vec<Case>,
}

fn oracle() -> Oracle {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/analysis/ttest_oracle.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn welch_matches_reference() {
    let o = oracle();
    assert_eq!(o.cases.len(), 20);
    for (i, c) in o.cases.iter().enumerate() {
        let r = welch_t_test(&c.a, &c.b, 0.05).unwrap();
        assert!((r.t_statistic - c.welch.t).abs() <= 1e-9, "case {i} t");
        assert!((r.degrees_of_freedom - c.welch.df).abs() <= 1e-9, "case {i} df");
        assert!((r.p_value - c.welch.p).abs() <= 1e-9, "case {i} p: {} vs {}", r.p_value, c.welch.p);
    }
}

#[test]
fn paired_matches_reference() {
    for (i, c) in oracle().cases.iter().enumerate() {
        let r = paired_t_test(&c.a, &c.paired_b, 0.05).unwrap();
        assert!((r.t_statistic - c.paired.t).abs() <= 1e-9, "case {i} t");
        assert_eq!(r.degrees_of_freedom, c.paired.df);
        assert!((r.p_value - c.paired.p).abs() <= 1e-9, "case {i} p");
    }
}

#[test]
fn published_decisions() {
    // (row, p, significant)
    let rows = [
        ("Sense of Being in VR", 2.49e-4, true),
        ("Ease of adjustment", 3.22e-7, true),
        ("Scenario Realism", 2.45e-3, true),
        ("Controls Responsiveness", 3.41e-5, true),
        ("Audio Immersiveness", 4.52e-2, true),
        ("Head Tracking", 1.08e-5, true),
        ("Traffic Simulation", 5.37e-1, false),
        ("Realistic Control", 7.89e-5, true),
        ("Overall Experience", 5.76e-7, true),
    ];
    for (name, p, sig) in rows {
        assert_eq!(decide(p, 0.05), sig, "{name}");
    }
}
