//! Headless step-rate measurement over a sweep of vehicle counts.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::DT;
use crate::geometry::Vec2;
use crate::network::RoadNetwork;
use crate::traffic::{Controls, DriverParams, Gear, SpawnError, Weather, WorldState};

pub const WARMUP_STEPS: u64 = 200;
pub const REPETITIONS: usize = 3;
const EGO_ID: &str = "ego";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("vehicle counts must be positive and strictly ascending")]
    BadCounts,
    #[error("step count must be positive")]
    NoSteps,
    #[error("no lane can hold the ego")]
    NoEgoLane,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One row of the sweep. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub vehicle_count: usize,
    pub total_steps: u64,
    pub wall_seconds: f64,
    pub steps_per_sec: f64,
    pub realtime_ratio: f64,
}

impl BenchResult {
    fn new(vehicle_count: usize, total_steps: u64, wall_seconds: f64) -> Self {
        let steps_per_sec = total_steps as f64 / wall_seconds;
        Self {
            vehicle_count,
            total_steps,
            wall_seconds,
            steps_per_sec,
            realtime_ratio: steps_per_sec * DT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub network: Arc<RoadNetwork>,
    pub vehicle_counts: Vec<usize>,
    pub steps: u64,
    pub seed: u64,
    /// Adds a lane-following ego limited to this speed.
    pub ego_speed_cap: Option<f64>,
    pub params: DriverParams,
    pub warmup: u64,
    pub repetitions: usize,
}

impl BenchConfig {
    pub fn new(network: Arc<RoadNetwork>, vehicle_counts: Vec<usize>, steps: u64, seed: u64) -> Self {
        Self {
            network,
            vehicle_counts,
            steps,
            seed,
            ego_speed_cap: None,
            params: DriverParams::default(),
            warmup: WARMUP_STEPS,
            repetitions: REPETITIONS,
        }
    }
}

/// Steers toward the lane centre a few metres ahead and holds a speed cap.
fn follow_lane(world: &WorldState, cap: f64) -> Controls {
    let Some(ego) = world.vehicle(EGO_ID) else {
        return Controls::default();
    };
    let Some(lane) = ego.lane else {
        return Controls::default();
    };
    let shape = &world.network().lane(lane).shape;
    let target = shape.pose_at((ego.s + 8.0).min(shape.length())).position();
    let to = Vec2::new(target.x - ego.pose.x, target.y - ego.pose.y);
    let err = to.y.atan2(to.x) - ego.pose.heading;
    let err = err.sin().atan2(err.cos());
    let (throttle, brake) = if ego.v < cap { (0.5, 0.0) } else { (0.0, 0.2) };
    Controls::clamped(throttle, brake, 2.0 * err, Gear::D)
}

enum Populate {
    NoEgo,
    Spawn(SpawnError),
}

fn try_populate(cfg: &BenchConfig, count: usize) -> Result<WorldState, Populate> {
    let mut world = WorldState::new(Arc::clone(&cfg.network), cfg.seed, Weather::default());
    if cfg.ego_speed_cap.is_some() {
        let (_, lane) = cfg
            .network
            .lanes()
            .filter(|(_, l)| !l.is_internal())
            .max_by(|a, b| a.1.length().total_cmp(&b.1.length()).then(b.0.cmp(&a.0)))
            .ok_or(Populate::NoEgo)?;
        let id = lane.id.clone();
        let s = lane.length() / 2.0;
        world.add_ego(EGO_ID, &id, s, 0.0).map_err(|_| Populate::NoEgo)?;
    }
    world
        .spawn_random_bots("b", count, cfg.params)
        .map_err(Populate::Spawn)?;
    Ok(world)
}

fn step(world: &mut WorldState, cap: Option<f64>) {
    if let Some(cap) = cap {
        let c = follow_lane(world, cap);
        world.set_controls(EGO_ID, c);
    }
    world.step();
}

/// Run warm-up plus `steps` steps and return the final world.
pub fn simulate(cfg: &BenchConfig, count: usize) -> Result<WorldState, SpawnError> {
    let mut world = match try_populate(cfg, count) {
        Ok(w) => w,
        Err(Populate::Spawn(e)) => return Err(e),
        Err(Populate::NoEgo) => return Err(SpawnError::Saturated { placed: 0, requested: count }),
    };
    for _ in 0..cfg.warmup + cfg.steps {
        step(&mut world, cfg.ego_speed_cap);
    }
    Ok(world)
}

/// Hash of everything that evolves during a run, RNG state included.
pub fn state_hash(world: &WorldState) -> u64 {
    let json = serde_json::to_string(world).expect("world state serializes");
    let mut h = DefaultHasher::new();
    json.hash(&mut h);
    h.finish()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Time every count. Rows whose count does not fit on the network are
/// skipped and reported through `skipped`.
pub fn run_bench(
    cfg: &BenchConfig,
    mut skipped: impl FnMut(String),
) -> Result<Vec<BenchResult>, BenchError> {
    let counts = &cfg.vehicle_counts;
    if counts.is_empty() || counts[0] == 0 || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::BadCounts);
    }
    if cfg.steps == 0 {
        return Err(BenchError::NoSteps);
    }
    let mut rows = Vec::with_capacity(counts.len());
    'counts: for &count in counts {
        let mut times = Vec::with_capacity(cfg.repetitions.max(1));
        for _ in 0..cfg.repetitions.max(1) {
            let mut world = match try_populate(cfg, count) {
                Ok(w) => w,
                Err(Populate::NoEgo) => return Err(BenchError::NoEgoLane),
                Err(Populate::Spawn(e)) => {
                    skipped(format!("{count} vehicles: {e}"));
                    continue 'counts;
                }
            };
            for _ in 0..cfg.warmup {
                step(&mut world, cfg.ego_speed_cap);
            }
            let start = Instant::now();
            for _ in 0..cfg.steps {
                step(&mut world, cfg.ego_speed_cap);
            }
            times.push(start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE));
        }
        rows.push(BenchResult::new(count, cfg.steps, median(times)));
    }
    Ok(rows)
}

pub fn write_csv(rows: &[BenchResult], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
