//! Run logs: JSON Lines with a header, per-step vehicle frames and events.

mod export;
mod replay;
mod writer;

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traffic::{AgentKind, Gear, Indicator, VehicleState, WorldState};

pub use export::{export_csv, Selector};
pub use replay::{replay, ReplayReport};
pub use writer::{LogSink, LogWriter, MemorySink};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log has no header line")]
    MissingHeader,
    #[error("unsupported log format version {0}")]
    VersionMismatch(u32),
    #[error("missing fixture: {0}")]
    MissingFixture(String),
    #[error("fixture cannot be loaded: {0}")]
    BadFixture(String),
    #[error("divergence at step {step}: expected `{expected}`, regenerated `{found}`")]
    DivergenceDetected {
        step: u64,
        expected: String,
        found: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format_version: u32,
    pub scenario_id: String,
    pub scenario_file: String,
    pub network_file: String,
    pub seed: u64,
    pub dt: f64,
    /// Which controller drove the ego.
    pub ego: String,
    /// Unix seconds; informational, ignored by determinism checks.
    pub started_at: Option<u64>,
}

/// One vehicle at one step. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcdFrame {
    pub t: f64,
    pub step_index: u64,
    pub vehicle_id: String,
    pub kind: AgentKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub a: f64,
    pub lane_id: Option<String>,
    pub s: f64,
    pub throttle: Option<f64>,
    pub brake: Option<f64>,
    pub steer: Option<f64>,
    pub gear: Option<Gear>,
    pub brake_light: bool,
    pub indicator: Indicator,
    pub gaze_x: Option<f64>,
    pub gaze_y: Option<f64>,
    pub eye_openness: Option<f64>,
    pub blink: Option<f64>,
}

impl FcdFrame {
    pub fn from_vehicle(world: &WorldState, v: &VehicleState) -> Self {
        let controls = v.controls();
        Self {
            t: world.time(),
            step_index: world.step_index(),
            vehicle_id: v.id.clone(),
            kind: v.kind,
            x: v.pose.x,
            y: v.pose.y,
            heading: v.pose.heading,
            v: v.v,
            a: v.a,
            lane_id: v.lane.map(|l| world.network().lane(l).id.clone()),
            s: v.s,
            throttle: controls.map(|c| c.throttle),
            brake: controls.map(|c| c.brake),
            steer: controls.map(|c| c.steer),
            gear: controls.map(|c| c.gear),
            brake_light: v.brake_light,
            indicator: v.indicator,
            gaze_x: None,
            gaze_y: None,
            eye_openness: None,
            blink: None,
        }
    }

    /// Frames of every vehicle, in id order.
    pub fn snapshot(world: &WorldState) -> Vec<FcdFrame> {
        world
            .vehicles()
            .iter()
            .map(|v| FcdFrame::from_vehicle(world, v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t: f64,
    pub step_index: u64,
    #[serde(rename = "type")]
    pub kind: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rec", rename_all = "snake_case")]
pub enum LogRecord {
    Hdr(LogHeader),
    Fcd(FcdFrame),
    Evt(LogEvent),
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}

/// A parsed log with its original lines kept for byte comparison.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub header: LogHeader,
    pub frames: Vec<FcdFrame>,
    pub events: Vec<LogEvent>,
    /// Every line after the header, verbatim.
    pub body: Vec<String>,
}

impl RunLog {
    pub fn read(reader: impl BufRead) -> Result<Self, LogError> {
        let mut header = None;
        let mut frames = Vec::new();
        let mut events = Vec::new();
        let mut body = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match rec {
                LogRecord::Hdr(h) if header.is_none() && i == 0 => {
                    if h.format_version != LOG_FORMAT_VERSION {
                        return Err(LogError::VersionMismatch(h.format_version));
                    }
                    header = Some(h);
                    continue;
                }
                LogRecord::Hdr(_) => {
                    return Err(LogError::Parse {
                        line: i + 1,
                        message: "header must be the first and only hdr line".into(),
                    })
                }
                _ if header.is_none() => return Err(LogError::MissingHeader),
                LogRecord::Fcd(f) => frames.push(f),
                LogRecord::Evt(e) => events.push(e),
            }
            body.push(line);
        }
        Ok(Self {
            header: header.ok_or(LogError::MissingHeader)?,
            frames,
            events,
            body,
        })
    }

    pub fn open(path: &std::path::Path) -> Result<Self, LogError> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }
}
