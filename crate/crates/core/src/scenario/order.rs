use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// The eight adversarial scenarios, in catalog order. The practice scenario
/// is not part of the shuffle.
pub const SCENARIO_IDS: [&str; 8] = [
    "sudden_lane_change",
    "t_bone",
    "sudden_stop",
    "red_light_runner",
    "deer_crossing",
    "roundabout",
    "ramp_merge",
    "jaywalker",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("expected exactly 8 scenarios, got {0}")]
    WrongCount(usize),
}

/// Seeded Fisher-Yates shuffle of one participant's scenario sequence.
pub fn randomize_order<T: Clone>(seed: u64, scenarios: &[T]) -> Result<Vec<T>, OrderError> {
    if scenarios.len() != SCENARIO_IDS.len() {
        return Err(OrderError::WrongCount(scenarios.len()));
    }
    let mut out = scenarios.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_count() {
        assert_eq!(randomize_order(1, &SCENARIO_IDS[..7]), Err(OrderError::WrongCount(7)));
        assert_eq!(randomize_order::<u8>(1, &[]), Err(OrderError::WrongCount(0)));
    }

    #[test]
    fn same_seed_same_order() {
        let a = randomize_order(42, &SCENARIO_IDS).unwrap();
        assert_eq!(a, randomize_order(42, &SCENARIO_IDS).unwrap());
        let mut sorted = a.clone();
        sorted.sort();
        let mut want = SCENARIO_IDS.to_vec();
        want.sort();
        assert_eq!(sorted, want);
    }
}
