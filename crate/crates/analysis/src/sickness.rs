//! Simulator-sickness subscores from pre/post questionnaire pairs.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::questionnaire::{Category, QuestionnaireResponse, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SicknessScores {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SicknessError {
    #[error("pre and post item sets differ (item {0})")]
    ItemMismatch(String),
    #[error("participant {participant} has no {stage:?} response for simulator {simulator}")]
    MissingStage { participant: String, simulator: String, stage: Stage },
}

/// Scores of one participant on one simulator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScores {
    pub participant_id: String,
    pub simulator_label: String,
    pub scores: SicknessScores,
}

/// Pair every pre response with its post response and score each pair.
/// Output is ordered by (participant, simulator).
pub fn sickness_by_pair(responses: &[QuestionnaireResponse]) -> Result<Vec<PairScores>, SicknessError> {
    let mut pairs: BTreeMap<(&str, &str), [Option<&QuestionnaireResponse>; 2]> = BTreeMap::new();
    for r in responses {
        let slot = pairs.entry((&r.participant_id, &r.simulator_label)).or_default();
        slot[(r.stage == Stage::Post) as usize] = Some(r);
    }
    pairs
        .into_iter()
        .map(|((participant, simulator), [pre, post])| {
            let missing = |stage| SicknessError::MissingStage {
                participant: participant.to_string(),
                simulator: simulator.to_string(),
                stage,
            };
            let pre = pre.ok_or_else(|| missing(Stage::Pre))?;
            let post = post.ok_or_else(|| missing(Stage::Post))?;
            Ok(PairScores {
                participant_id: participant.to_string(),
                simulator_label: simulator.to_string(),
                scores: sickness_scores(pre, post)?,
            })
        })
        .collect()
}

/// Mean scores per simulator over the given pairs.
pub fn mean_by_simulator(pairs: &[PairScores]) -> BTreeMap<String, SicknessScores> {
    let mut groups: BTreeMap<&str, Vec<SicknessScores>> = BTreeMap::new();
    for p in pairs {
        groups.entry(&p.simulator_label).or_default().push(p.scores);
    }
    groups
        .into_iter()
        .map(|(sim, v)| {
            let avg = |f: fn(&SicknessScores) -> f64| mean(&v.iter().map(f).collect::<Vec<_>>());
            let s = SicknessScores {
                nausea: avg(|s| s.nausea),
                oculomotor: avg(|s| s.oculomotor),
                disorientation: avg(|s| s.disorientation),
                total: avg(|s| s.total),
            };
            (sim.to_string(), s)
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Score one participant/simulator pair. Each item contributes
/// `max(0, post - pre)`; experience items are ignored.
pub fn sickness_scores(
    pre: &QuestionnaireResponse,
    post: &QuestionnaireResponse,
) -> Result<SicknessScores, SicknessError> {
    let index = |r: &QuestionnaireResponse| -> BTreeMap<String, (Category, f64)> {
        r.items
            .iter()
            .filter(|i| i.category.is_sickness())
            .map(|i| (i.item_id.clone(), (i.category, i.score)))
            .collect()
    };
    let before = index(pre);
    let after = index(post);
    if let Some(id) = before.keys().find(|k| !after.contains_key(*k)) {
        return Err(SicknessError::ItemMismatch(id.clone()));
    }
    if let Some(id) = after.keys().find(|k| !before.contains_key(*k)) {
        return Err(SicknessError::ItemMismatch(id.clone()));
    }

    let mut by_cat: BTreeMap<Category, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::with_capacity(after.len());
    for (id, &(cat, post_score)) in &after {
        let (pre_cat, pre_score) = before[id];
        if pre_cat != cat {
            return Err(SicknessError::ItemMismatch(id.clone()));
        }
        let delta = (post_score - pre_score).max(0.0);
        by_cat.entry(cat).or_default().push(delta);
        all.push(delta);
    }
    let cat = |c| by_cat.get(&c).map_or(0.0, |v| mean(v));
    Ok(SicknessScores {
        nausea: cat(Category::Nausea),
        oculomotor: cat(Category::Oculomotor),
        disorientation: cat(Category::Disorientation),
        total: mean(&all),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::questionnaire::Item;
    use proptest::prelude::*;

    fn resp(stage: Stage, items: &[(&str, Category, f64)]) -> QuestionnaireResponse {
        QuestionnaireResponse {
            participant_id: "p".into(),
            stage,
            simulator_label: "vr".into(),
            items: items
                .iter()
                .map(|&(id, category, score)| Item { item_id: id.into(), category, score })
                .collect(),
        }
    }

    use Category::*;

    #[test]
    fn equal_pre_post_is_zero() {
        let items = [("a", Nausea, 3.0), ("b", Oculomotor, 7.0), ("c", Disorientation, 1.0)];
        let s = sickness_scores(&resp(Stage::Pre, &items), &resp(Stage::Post, &items)).unwrap();
        assert_eq!(s, SicknessScores { nausea: 0.0, oculomotor: 0.0, disorientation: 0.0, total: 0.0 });
    }

    #[test]
    fn saturation() {
        let pre = [("a", Nausea, 0.0), ("b", Oculomotor, 0.0), ("c", Disorientation, 0.0)];
        let post = [("a", Nausea, 10.0), ("b", Oculomotor, 10.0), ("c", Disorientation, 10.0)];
        let s = sickness_scores(&resp(Stage::Pre, &pre), &resp(Stage::Post, &post)).unwrap();
        assert_eq!(s, SicknessScores { nausea: 10.0, oculomotor: 10.0, disorientation: 10.0, total: 10.0 });
    }

    #[test]
    fn mixed_deltas() {
        let pre = [
            ("n1", Nausea, 1.0), ("n2", Nausea, 2.0), ("o1", Oculomotor, 5.0),
            ("d1", Disorientation, 0.0), ("d2", Disorientation, 4.0), ("d3", Disorientation, 2.0),
            ("x", Experience, 9.0),
        ];
        let post = [
            ("n1", Nausea, 3.0), ("n2", Nausea, 6.0), ("o1", Oculomotor, 6.0),
            ("d1", Disorientation, 3.0), ("d2", Disorientation, 1.0), ("d3", Disorientation, 5.0),
            ("x", Experience, 0.0),
        ];
        let s = sickness_scores(&resp(Stage::Pre, &pre), &resp(Stage::Post, &post)).unwrap();
        assert_eq!(s.nausea, 3.0);
        assert_eq!(s.oculomotor, 1.0);
        assert_eq!(s.disorientation, 2.0);
        assert!((s.total - 13.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch() {
        let pre = [("a", Nausea, 1.0)];
        let post = [("b", Nausea, 1.0)];
        assert_eq!(
            sickness_scores(&resp(Stage::Pre, &pre), &resp(Stage::Post, &post)),
            Err(SicknessError::ItemMismatch("a".into()))
        );
        let post = [("a", Oculomotor, 1.0)];
        assert!(sickness_scores(&resp(Stage::Pre, &pre), &resp(Stage::Post, &post)).is_err());
    }

    #[test]
    fn pairs_by_participant_and_simulator() {
        let mut a_pre = resp(Stage::Pre, &[("n", Nausea, 1.0)]);
        let mut a_post = resp(Stage::Post, &[("n", Nausea, 5.0)]);
        let mut b_pre = a_pre.clone();
        let mut b_post = resp(Stage::Post, &[("n", Nausea, 2.0)]);
        a_pre.participant_id = "a".into();
        a_post.participant_id = "a".into();
        b_pre.participant_id = "b".into();
        b_post.participant_id = "b".into();
        let pairs = sickness_by_pair(&[b_post.clone(), a_pre.clone(), a_post, b_pre]).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].participant_id.as_str(), pairs[0].scores.total), ("a", 4.0));
        assert_eq!((pairs[1].participant_id.as_str(), pairs[1].scores.total), ("b", 1.0));
        assert_eq!(mean_by_simulator(&pairs)["vr"].nausea, 2.5);
        assert!(matches!(
            sickness_by_pair(&[a_pre]),
            Err(SicknessError::MissingStage { stage: Stage::Post, .. })
        ));
    }

    proptest! {
        #[test]
        fn bounded(pairs in prop::collection::vec((0usize..3, 0.0f64..=10.0, 0.0f64..=10.0), 1..20)) {
            let cats = [Nausea, Oculomotor, Disorientation];
            let ids: Vec<String> = (0..pairs.len()).map(|i| format!("q{i}")).collect();
            let pre: Vec<_> = pairs.iter().zip(&ids).map(|(&(c, a, _), id)| (id.as_str(), cats[c], a)).collect();
            let post: Vec<_> = pairs.iter().zip(&ids).map(|(&(c, _, b), id)| (id.as_str(), cats[c], b)).collect();
            let s = sickness_scores(&resp(Stage::Pre, &pre), &resp(Stage::Post, &post)).unwrap();
            let deltas: Vec<f64> = pairs.iter().map(|&(_, a, b)| (b - a).max(0.0)).collect();
            let lo = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in [s.nausea, s.oculomotor, s.disorientation, s.total] {
                prop_assert!((0.0..=10.0).contains(&v));
            }
            prop_assert!(s.total >= lo - 1e-12 && s.total <= hi + 1e-12);
        }
    }
}
