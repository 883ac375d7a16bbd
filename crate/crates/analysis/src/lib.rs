//! Study analysis: simulator-sickness scoring, two-sample t-tests, the
//! fidelity rubric and preference tallies. Everything here is a pure function.

pub mod fidelity;
pub mod prefs;
pub mod questionnaire;
pub mod sickness;
pub mod special;
pub mod ttest;

pub use fidelity::{fidelity_score, Controls, FidelityConfig, MotionBase, Visual};
pub use prefs::{preference_tally, CriterionTally, FinalQuestionnaire, FinalResponse, PreferenceTally, PrefsError, DEFAULT_CRITERIA};
pub use questionnaire::{parse_responses, Category, Item, QuestionnaireError, QuestionnaireResponse, Stage};
pub use sickness::{mean_by_simulator, sickness_by_pair, sickness_scores, PairScores, SicknessError, SicknessScores};
pub use ttest::{decide, paired_t_test, welch_t_test, TestError, TestResult};
