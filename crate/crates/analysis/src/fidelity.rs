//! Simulator fidelity rubric, out of 15 points.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionBase {
    None,
    ThreeDof,
    SixDofPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visual {
    SingleFlat,
    TripleFlat,
    SurroundOrHmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controls {
    KeyboardOrGamepad,
    WheelWithSeat,
    FullCab,
}

impl MotionBase {
    pub const ALL: [Self; 3] = [Self::None, Self::ThreeDof, Self::SixDofPlus];
    pub fn points(self) -> u32 {
        match self {
            Self::None => 1,
            Self::ThreeDof => 3,
            Self::SixDofPlus => 5,
        }
    }
}

impl Visual {
    pub const ALL: [Self; 3] = [Self::SingleFlat, Self::TripleFlat, Self::SurroundOrHmd];
    pub fn points(self) -> u32 {
        match self {
            Self::SingleFlat => 2,
            Self::TripleFlat => 3,
            Self::SurroundOrHmd => 5,
        }
    }
}

impl Controls {
    pub const ALL: [Self; 3] = [Self::KeyboardOrGamepad, Self::WheelWithSeat, Self::FullCab];
    pub fn points(self) -> u32 {
        match self {
            Self::KeyboardOrGamepad => 1,
            Self::WheelWithSeat => 3,
            Self::FullCab => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub motion_base: MotionBase,
    pub visual: Visual,
    pub controls: Controls,
}

pub fn fidelity_score(cfg: FidelityConfig) -> u32 {
    cfg.motion_base.points() + cfg.visual.points() + cfg.controls.points()
}
