use std::path::{Path, PathBuf};

use super::{LogError, LogRecord, RunLog};
use crate::scenario::{LoadedScenario, RunOutcome, ScenarioError, ScenarioRun, EGO_ID};
use crate::traffic::Controls;

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub steps: u64,
    pub lines_compared: usize,
    /// `None` for a zero-step log.
    pub outcome: Option<RunOutcome>,
}

fn resolve(scenario_file: &str, log_path: Option<&Path>) -> Result<PathBuf, LogError> {
    let direct = PathBuf::from(scenario_file);
    if direct.is_file() {
        return Ok(direct);
    }
    if direct.is_relative() {
        if let Some(dir) = log_path.and_then(Path::parent) {
            let p = dir.join(&direct);
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(LogError::MissingFixture(scenario_file.to_string()))
}

/// Re-run the logged scenario with the logged ego inputs and compare every
/// body line. `log_path` helps resolve a relative scenario path.
pub fn replay(log: &RunLog, log_path: Option<&Path>) -> Result<ReplayReport, LogError> {
    let path = resolve(&log.header.scenario_file, log_path)?;
    let scenario = LoadedScenario::from_file(&path).map_err(|e| match e {
        ScenarioError::Io { path, .. } => LogError::MissingFixture(path.display().to_string()),
        other => LogError::BadFixture(other.to_string()),
    })?;
    let mut run = ScenarioRun::new(scenario, log.header.seed)
        .map_err(|e| LogError::BadFixture(e.to_string()))?;

    let steps = log.frames.last().map_or(0, |f| f.step_index);
    let mut controls = vec![Controls::default(); steps as usize];
    for f in log.frames.iter().filter(|f| f.vehicle_id == EGO_ID) {
        if let (Some(k), Some(throttle), Some(brake), Some(steer), Some(gear)) = (
            (f.step_index as usize).checked_sub(1),
            f.throttle,
            f.brake,
            f.steer,
            f.gear,
        ) {
            if k < controls.len() {
                controls[k] = Controls { throttle, brake, steer, gear };
            }
        }
    }

    let mut compared = 0;
    let mut check = |rec: LogRecord, step: u64| -> Result<(), LogError> {
        let found = rec.to_line();
        match log.body.get(compared) {
            Some(expected) if *expected == found => {
                compared += 1;
                Ok(())
            }
            expected => Err(LogError::DivergenceDetected {
                step,
                expected: expected.cloned().unwrap_or_else(|| "<end of log>".into()),
                found,
            }),
        }
    };
    for c in &controls {
        if run.ended().is_some() {
            break;
        }
        let recs = run.step(*c);
        let k = run.world().step_index();
        for r in recs.records() {
            check(r, k)?;
        }
    }
    let ended_by_request = log.events.last().is_some_and(|e| {
        e.kind == "scenario_end" && e.detail.get("reason").and_then(|r| r.as_str()) == Some("end_run")
    });
    if ended_by_request {
        if let Some(e) = run.end_run() {
            check(LogRecord::Evt(e), run.world().step_index())?;
        }
    }
    if compared != log.body.len() {
        return Err(LogError::DivergenceDetected {
            step: run.world().step_index(),
            expected: log.body[compared].clone(),
            found: "<end of replay>".into(),
        });
    }
    Ok(ReplayReport {
        steps: run.world().step_index(),
        lines_compared: compared,
        outcome: run.outcome().ok(),
    })
}
