use serde::{Deserialize, Serialize};

/// Signal indication for one controlled connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Green,
    Yellow,
    Red,
}

impl SignalState {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'G' | 'g' => Some(SignalState::Green),
            'y' | 'Y' => Some(SignalState::Yellow),
            'r' | 'R' => Some(SignalState::Red),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            SignalState::Green => 'G',
            SignalState::Yellow => 'y',
            SignalState::Red => 'r',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub states: Vec<SignalState>,
    pub duration: f64,
}

/// A fixed-time signal program. All phases control the same number of links.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalProgram {
    pub id: String,
    pub phases: Vec<Phase>,
    pub offset: f64,
}

impl SignalProgram {
    pub fn cycle(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn link_count(&self) -> usize {
        self.phases.first().map_or(0, |p| p.states.len())
    }

    /// Phase index active at time `t`. A time exactly on a phase end belongs
    /// to the next phase.
    pub fn phase_at(&self, t: f64) -> usize {
        let effective = (t + self.offset).rem_euclid(self.cycle());
        let mut end = 0.0;
        for (i, phase) in self.phases.iter().enumerate() {
            end += phase.duration;
            if effective < end {
                return i;
            }
        }
        // rounding can leave `effective` a hair below the cycle length
        0
    }

    /// State of link `link` at time `t`, or `None` if the program does not
    /// control that link.
    pub fn state(&self, link: usize, t: f64) -> Option<SignalState> {
        if link >= self.link_count() {
            return None;
        }
        Some(self.phases[self.phase_at(t)].states[link])
    }
}
