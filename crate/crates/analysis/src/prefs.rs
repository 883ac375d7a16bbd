//! Post-study preference tallies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Criteria asked in the final questionnaire.
pub const DEFAULT_CRITERIA: [&str; 6] = [
    "visual_representation",
    "audio_representation",
    "control_responsiveness",
    "immersion",
    "frame_rate",
    "recommendation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalResponse {
    pub participant_id: String,
    /// criterion -> chosen simulator label
    pub choices: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalQuestionnaire {
    pub simulators: Vec<String>,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<String>,
    pub responses: Vec<FinalResponse>,
}

fn default_criteria() -> Vec<String> {
    DEFAULT_CRITERIA.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum PrefsError {
    #[error("participant {participant}: {reason}")]
    InvalidChoice { participant: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionTally {
    pub counts: BTreeMap<String, u32>,
    /// `None` when nobody answered.
    pub proportions: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceTally {
    pub responses: usize,
    pub criteria: BTreeMap<String, CriterionTally>,
}

/// Count each response's single choice per criterion. A response must answer
/// every criterion, and only with a listed simulator.
pub fn preference_tally(q: &FinalQuestionnaire) -> Result<PreferenceTally, PrefsError> {
    let sims: BTreeSet<&str> = q.simulators.iter().map(String::as_str).collect();
    let wanted: BTreeSet<&str> = q.criteria.iter().map(String::as_str).collect();
    let mut counts: BTreeMap<&str, BTreeMap<&str, u32>> = wanted
        .iter()
        .map(|c| (*c, sims.iter().map(|s| (*s, 0)).collect()))
        .collect();

    for r in &q.responses {
        let invalid = |reason: String| PrefsError::InvalidChoice {
            participant: r.participant_id.clone(),
            reason,
        };
        if let Some(c) = r.choices.keys().find(|c| !wanted.contains(c.as_str())) {
            return Err(invalid(format!("unknown criterion {c:?}")));
        }
        for c in &wanted {
            let choice = r.choices.get(*c).ok_or_else(|| invalid(format!("no choice for {c:?}")))?;
            let slot = counts
                .get_mut(c)
                .and_then(|m| m.get_mut(choice.as_str()))
                .ok_or_else(|| invalid(format!("unknown simulator {choice:?} for {c:?}")))?;
            *slot += 1;
        }
    }

    let n = q.responses.len();
    let criteria = counts
        .into_iter()
        .map(|(c, per_sim)| {
            let proportions = per_sim
                .iter()
                .map(|(s, k)| (s.to_string(), (n > 0).then(|| *k as f64 / n as f64)))
                .collect();
            let counts = per_sim.into_iter().map(|(s, k)| (s.to_string(), k)).collect();
            (c.to_string(), CriterionTally { counts, proportions })
        })
        .collect();
    Ok(PreferenceTally { responses: n, criteria })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(criteria: &[&str], choices: &[&[&str]]) -> FinalQuestionnaire {
        FinalQuestionnaire {
            simulators: vec!["A".into(), "B".into()],
            criteria: criteria.iter().map(|s| s.to_string()).collect(),
            responses: choices
                .iter()
                .enumerate()
                .map(|(i, picks)| FinalResponse {
                    participant_id: format!("p{i}"),
                    choices: criteria
                        .iter()
                        .zip(picks.iter())
                        .map(|(c, s)| (c.to_string(), s.to_string()))
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn no_responses() {
        let t = preference_tally(&q(&["frame_rate"], &[])).unwrap();
        assert_eq!(t.responses, 0);
        let fr = &t.criteria["frame_rate"];
        assert!(fr.counts.values().all(|&k| k == 0));
        assert!(fr.proportions.values().all(Option::is_none));
    }

    #[test]
    fn unanimous() {
        let t = preference_tally(&q(&["frame_rate"], &[&["A"], &["A"], &["A"]])).unwrap();
        let fr = &t.criteria["frame_rate"];
        assert_eq!(fr.counts["A"], 3);
        assert_eq!(fr.counts["B"], 0);
        assert_eq!(fr.proportions["A"], Some(1.0));
        assert_eq!(fr.proportions["B"], Some(0.0));
    }

    #[test]
    fn invalid_choices() {
        let bad_sim = q(&["immersion"], &[&["C"]]);
        assert!(matches!(preference_tally(&bad_sim), Err(PrefsError::InvalidChoice { .. })));
        let missing = q(&["immersion", "frame_rate"], &[&["A"]]);
        assert!(matches!(preference_tally(&missing), Err(PrefsError::InvalidChoice { .. })));
        let mut extra = q(&["immersion"], &[&["A"]]);
        extra.responses[0].choices.insert("smell".into(), "A".into());
        assert!(matches!(preference_tally(&extra), Err(PrefsError::InvalidChoice { .. })));
    }

    #[test]
    fn default_criteria_when_omitted() {
        let doc = r#"{"simulators": ["vr", "flat"], "responses": []}"#;
        let q: FinalQuestionnaire = serde_json::from_str(doc).unwrap();
        assert_eq!(q.criteria.len(), DEFAULT_CRITERIA.len());
    }

    proptest! {
        #[test]
        fn proportions_sum_to_one(picks in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..60)) {
            let rows: Vec<Vec<&str>> = picks
                .iter()
                .map(|r| r.iter().map(|&b| if b { "A" } else { "B" }).collect())
                .collect();
            let refs: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
            let t = preference_tally(&q(&DEFAULT_CRITERIA, &refs)).unwrap();
            for tally in t.criteria.values() {
                let sum: f64 = tally.proportions.values().map(|p| p.unwrap()).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                prop_assert_eq!(tally.counts.values().sum::<u32>() as usize, picks.len());
            }
        }
    }
}
