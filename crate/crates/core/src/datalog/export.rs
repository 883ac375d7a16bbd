use std::io::Write;

use super::{LogError, RunLog};

/// Which frames to export.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selector {
    pub vehicle_id: Option<String>,
}

/// One CSV row per selected frame; returns the row count (header excluded).
pub fn export_csv(log: &RunLog, selector: &Selector, out: impl Write) -> Result<usize, LogError> {
    let mut w = csv::Writer::from_writer(out);
    let mut rows = 0;
    for f in &log.frames {
        if selector.vehicle_id.as_ref().is_some_and(|id| *id != f.vehicle_id) {
            continue;
        }
        w.serialize(f)?;
        rows += 1;
    }
    if rows == 0 {
        // header only, so consumers still see the schema
        w.write_record(COLUMNS)?;
    }
    w.flush()?;
    Ok(rows)
}

pub(crate) const COLUMNS: [&str; 21] = [
    "t",
    "step_index",
    "vehicle_id",
    "kind",
    "x",
    "y",
    "heading",
    "v",
    "a",
    "lane_id",
    "s",
    "throttle",
    "brake",
    "steer",
    "gear",
    "brake_light",
    "indicator",
    "gaze_x",
    "gaze_y",
    "eye_openness",
    "blink",
];
