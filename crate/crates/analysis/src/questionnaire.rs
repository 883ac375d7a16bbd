//! Questionnaire response files.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCORE_MIN: f64 = 0.0;
pub const SCORE_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Nausea,
    Oculomotor,
    Disorientation,
    Experience,
}

impl Category {
    pub fn is_sickness(self) -> bool {
        self != Category::Experience
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub item_id: String,
    pub category: Category,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireResponse {
    pub participant_id: String,
    pub stage: Stage,
    pub simulator_label: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Error)]
pub enum QuestionnaireError {
    #[error("malformed questionnaire file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("item {item_id}: score is not a number")]
    NotANumber { item_id: String },
    #[error("duplicate response for participant {participant}, {stage:?}, simulator {simulator}")]
    Duplicate { participant: String, stage: Stage, simulator: String },
}

impl QuestionnaireResponse {
    /// Clamp every score into [0, 10].
    pub fn clamped(mut self) -> Result<Self, QuestionnaireError> {
        for item in &mut self.items {
            if item.score.is_nan() {
                return Err(QuestionnaireError::NotANumber { item_id: item.item_id.clone() });
            }
            item.score = item.score.clamp(SCORE_MIN, SCORE_MAX);
        }
        Ok(self)
    }
}

/// Parse a JSON array of responses, clamping scores and rejecting repeats of
/// the same (participant, stage, simulator).
pub fn parse_responses(json: &str) -> Result<Vec<QuestionnaireResponse>, QuestionnaireError> {
    let raw: Vec<QuestionnaireResponse> = serde_json::from_str(json)?;
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|r| {
            let key = (r.participant_id.clone(), r.stage, r.simulator_label.clone());
            if !seen.insert(key) {
                return Err(QuestionnaireError::Duplicate {
                    participant: r.participant_id,
                    stage: r.stage,
                    simulator: r.simulator_label,
                });
            }
            r.clamped()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(scores: &[f64]) -> String {
        let items: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| format!(r#"{{"item_id": "q{i}", "category": "nausea", "score": {s}}}"#))
            .collect();
        format!(
            r#"[{{"participant_id": "p1", "stage": "pre", "simulator_label": "vr", "items": [{}]}}]"#,
            items.join(",")
        )
    }

    #[test]
    fn scores_clamped_on_ingest() {
        let r = parse_responses(&doc(&[-3.0, 4.5, 12.0])).unwrap();
        let scores: Vec<f64> = r[0].items.iter().map(|i| i.score).collect();
        assert_eq!(scores, [0.0, 4.5, 10.0]);
    }

    #[test]
    fn duplicate_key_rejected() {
        let one = r#"{"participant_id": "p1", "stage": "post", "simulator_label": "vr", "items": []}"#;
        let err = parse_responses(&format!("[{one}, {one}]")).unwrap_err();
        assert!(matches!(err, QuestionnaireError::Duplicate { .. }));
    }

    #[test]
    fn unknown_category_rejected() {
        let bad = r#"[{"participant_id": "p", "stage": "pre", "simulator_label": "vr",
                       "items": [{"item_id": "a", "category": "vertigo", "score": 1}]}]"#;
        assert!(matches!(parse_responses(bad), Err(QuestionnaireError::Json(_))));
    }
}
