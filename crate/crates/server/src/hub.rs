//! The simulation loop. It owns the world and talks to sessions only through
//! the command channel (in) and per-session outboxes (out).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use precrash_core::datalog::{FcdFrame, LogEvent, LogRecord, LogSink, LogWriter};
use precrash_core::scenario::{scenario_files, LoadedScenario, ScenarioRun};
use precrash_core::traffic::Controls;
use serde_json::{json, Value};

use crate::outbox::Outbox;
use crate::protocol::{
    major_version, parse_request, Channel, ErrorCode, Message, ModeName, Request, Role,
    DEFAULT_RATE_HZ, MAX_RATE_HZ, MAX_STEP_BATCH, PROTOCOL_MAJOR, PROTOCOL_VERSION,
};
use crate::ServerConfig;

pub type SessionId = u64;

pub(crate) enum Command {
    Open { session: SessionId, outbox: Arc<Outbox> },
    Frame { session: SessionId, body: Vec<u8> },
    Close { session: SessionId },
}

#[derive(Debug, Clone)]
pub(crate) struct CatalogEntry {
    pub id: String,
    pub title: String,
    pub duration_s: f64,
    pub practice: bool,
    pub path: PathBuf,
}

/// Load every scenario in `dir`; broken files are logged and left out.
pub(crate) fn load_catalog(dir: &Path) -> std::io::Result<Vec<CatalogEntry>> {
    let mut out = Vec::new();
    for path in scenario_files(dir)? {
        let path = path.canonicalize().unwrap_or(path);
        match LoadedScenario::from_file(&path) {
            Ok(s) => out.push(CatalogEntry {
                id: s.spec.id.clone(),
                title: s.spec.title.clone(),
                duration_s: s.spec.duration_s,
                practice: s.spec.is_practice(),
                path,
            }),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out.dedup_by(|b, a| {
        let dup = a.id == b.id;
        if dup {
            log::warn!("duplicate scenario id {} in {}", b.id, b.path.display());
        }
        dup
    });
    Ok(out)
}

struct Session {
    outbox: Arc<Outbox>,
    greeted: bool,
    role: Role,
    channels: BTreeSet<Channel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Stepped,
    Realtime { rate_hz: f64 },
}

struct Pacer {
    start: Instant,
    steps: u64,
    last_clock: Instant,
}

impl Pacer {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, steps: 0, last_clock: now }
    }

    fn due(&self, rate_hz: f64, k: u64) -> Instant {
        self.start + Duration::from_secs_f64(k as f64 / rate_hz)
    }
}

struct Active {
    run: ScenarioRun,
    log: Option<LogWriter>,
}

pub(crate) struct Hub {
    catalog: Vec<CatalogEntry>,
    log_dir: Option<PathBuf>,
    runs_started: u64,
    sessions: BTreeMap<SessionId, Session>,
    controller: Option<SessionId>,
    active: Option<Active>,
    controls: Controls,
    mode: Mode,
    pacer: Pacer,
}

type Reply = Result<Message, Message>;

impl Hub {
    pub(crate) fn new(cfg: &ServerConfig, catalog: Vec<CatalogEntry>) -> Self {
        Self {
            catalog,
            log_dir: cfg.log_dir.clone(),
            runs_started: 0,
            sessions: BTreeMap::new(),
            controller: None,
            active: None,
            controls: Controls::default(),
            mode: Mode::Stepped,
            pacer: Pacer::new(),
        }
    }

    pub(crate) fn run(mut self, rx: Receiver<Command>) {
        loop {
            let wait = match self.next_due() {
                Some(due) => {
                    if Instant::now() >= due {
                        self.tick();
                    }
                    // keep serving commands between catch-up steps
                    self.next_due()
                        .map(|d| d.saturating_duration_since(Instant::now()))
                }
                None => None,
            };
            let cmd = match wait {
                Some(w) => match rx.recv_timeout(w) {
                    Ok(c) => c,
                    Err(RecvTimeoutError::Timeout) => continue,
                    Err(RecvTimeoutError::Disconnected) => break,
                },
                None => match rx.recv() {
                    Ok(c) => c,
                    Err(_) => break,
                },
            };
            self.command(cmd);
        }
        self.finish_log();
        for s in self.sessions.values() {
            s.outbox.close();
        }
    }

    fn command(&mut self, cmd: Command) {
        match cmd {
            Command::Open { session, outbox } => {
                self.sessions.insert(
                    session,
                    Session { outbox, greeted: false, role: Role::Observer, channels: BTreeSet::new() },
                );
            }
            Command::Frame { session, body } => {
                let reply = match parse_request(&body) {
                    Ok((id, req)) => self.handle(session, id, req).unwrap_or_else(|e| e),
                    Err(rejected) => rejected.0,
                };
                if let Some(s) = self.sessions.get(&session) {
                    s.outbox.send(&reply);
                }
            }
            Command::Close { session } => {
                if let Some(s) = self.sessions.remove(&session) {
                    s.outbox.close();
                }
                if self.controller == Some(session) {
                    self.controller = None;
                }
            }
        }
    }

    fn next_due(&self) -> Option<Instant> {
        match self.mode {
            Mode::Realtime { rate_hz }
                if self.active.as_ref().is_some_and(|a| a.run.ended().is_none()) =>
            {
                Some(self.pacer.due(rate_hz, self.pacer.steps + 1))
            }
            _ => None,
        }
    }

    fn tick(&mut self) {
        let Mode::Realtime { rate_hz } = self.mode else { return };
        self.step_once();
        self.pacer.steps += 1;
        let now = Instant::now();
        if now.duration_since(self.pacer.last_clock) >= Duration::from_secs(1) {
            self.pacer.last_clock = now;
            let lag = now.saturating_duration_since(self.pacer.due(rate_hz, self.pacer.steps));
            let world = self.active.as_ref().expect("ticking implies a run").run.world();
            let msg = Message::push(
                "clock",
                json!({
                    "t": world.time(),
                    "step_index": world.step_index(),
                    "rate_hz": rate_hz,
                    "wall_elapsed_s": now.duration_since(self.pacer.start).as_secs_f64(),
                    "lag_s": lag.as_secs_f64(),
                }),
            );
            self.broadcast(Channel::Events, &msg);
        }
    }

    fn broadcast(&self, channel: Channel, msg: &Message) {
        for s in self.sessions.values().filter(|s| s.channels.contains(&channel)) {
            s.outbox.send(msg);
        }
    }

    fn event_push(e: &LogEvent) -> Message {
        Message::push(
            "event",
            json!({"kind": e.kind, "t": e.t, "step_index": e.step_index, "detail": e.detail}),
        )
    }

    fn record(&mut self, rec: &LogRecord) {
        let Some(active) = self.active.as_mut() else { return };
        if let Some(w) = active.log.as_mut() {
            if let Err(e) = w.record(rec) {
                log::error!("run log write failed, logging stops: {e}");
                active.log = None;
            }
        }
    }

    fn step_once(&mut self) {
        let Some(active) = self.active.as_mut() else { return };
        if active.run.ended().is_some() {
            return;
        }
        let recs = active.run.step(self.controls);
        let (t, k) = (active.run.world().time(), active.run.world().step_index());
        for r in recs.records() {
            self.record(&r);
        }
        if k % 50 == 0 {
            if let Some(w) = self.active.as_mut().and_then(|a| a.log.as_mut()) {
                let _ = w.flush();
            }
        }
        let fcd = Message::push("fcd_frame", json!({"t": t, "step_index": k, "frames": recs.frames}));
        for s in self.sessions.values().filter(|s| s.channels.contains(&Channel::Fcd)) {
            s.outbox.send_fcd(fcd.clone());
        }
        for e in &recs.events {
            self.broadcast(Channel::Events, &Self::event_push(e));
        }
        if self.active.as_ref().is_some_and(|a| a.run.ended().is_some()) {
            self.finish_log();
        }
    }

    fn finish_log(&mut self) {
        if let Some(w) = self.active.as_mut().and_then(|a| a.log.take()) {
            if let Err(e) = w.finish() {
                log::error!("run log close failed: {e}");
            }
        }
    }

    fn open_log(&mut self, run: &ScenarioRun) -> Option<LogWriter> {
        let dir = self.log_dir.as_ref()?;
        self.runs_started += 1;
        let started = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        let name = format!(
            "{}_seed{}_{}_{}.run.jsonl",
            run.scenario().spec.id,
            run.seed(),
            started.unwrap_or(0),
            self.runs_started
        );
        let mut w = match std::fs::create_dir_all(dir).map_err(Into::into).and_then(|_| LogWriter::create(&dir.join(&name))) {
            Ok(w) => w,
            Err(e) => {
                log::error!("cannot open run log {name}: {e}");
                return None;
            }
        };
        if let Err(e) = w.record(&LogRecord::Hdr(run.header("server", started))) {
            log::error!("cannot write run log header: {e}");
            return None;
        }
        log::info!("logging run to {}", dir.join(name).display());
        Some(w)
    }

    fn require_controller(&self, session: SessionId, id: u64) -> Result<(), Message> {
        if self.controller == Some(session) {
            Ok(())
        } else {
            Err(Message::error(id, ErrorCode::NotController, "this session is an observer"))
        }
    }

    fn require_loaded(&self, id: u64) -> Result<&Active, Message> {
        self.active
            .as_ref()
            .ok_or_else(|| Message::error(id, ErrorCode::NotLoaded, "no scenario loaded"))
    }

    fn ok(id: u64, payload: Value) -> Reply {
        Ok(Message::new(id, "ok", payload))
    }

    fn handle(&mut self, session: SessionId, id: u64, req: Request) -> Reply {
        let greeted = self.sessions.get(&session).is_some_and(|s| s.greeted);
        if !greeted && !matches!(req, Request::Hello { .. }) {
            return Err(Message::error(id, ErrorCode::HelloRequired, "send hello first"));
        }
        match req {
            Request::Hello { version, role } => self.hello(session, id, &version, role),
            Request::ListScenarios {} => {
                let list: Vec<Value> = self
                    .catalog
                    .iter()
                    .map(|e| json!({"id": e.id, "title": e.title, "duration_s": e.duration_s, "practice": e.practice}))
                    .collect();
                Ok(Message::new(id, "scenarios", json!({"scenarios": list})))
            }
            Request::LoadScenario { id: sid, seed } => {
                self.require_controller(session, id)?;
                self.load(id, &sid, seed)
            }
            Request::SetMode { mode, rate_hz } => {
                self.require_controller(session, id)?;
                self.mode = match mode {
                    ModeName::Stepped => Mode::Stepped,
                    ModeName::Realtime => {
                        let rate_hz = rate_hz.unwrap_or(DEFAULT_RATE_HZ);
                        if !(rate_hz > 0.0 && rate_hz <= MAX_RATE_HZ) {
                            return Err(Message::error(
                                id,
                                ErrorCode::BadMode,
                                format!("rate_hz must be in (0, {MAX_RATE_HZ}]"),
                            ));
                        }
                        Mode::Realtime { rate_hz }
                    }
                };
                self.pacer = Pacer::new();
                Self::ok(id, self.mode_json())
            }
            Request::Step { n } => {
                self.require_controller(session, id)?;
                self.require_loaded(id)?;
                if self.mode != Mode::Stepped {
                    return Err(Message::error(id, ErrorCode::BadMode, "step is only legal in stepped mode"));
                }
                if n > MAX_STEP_BATCH {
                    return Err(Message::error(id, ErrorCode::BadJson, format!("n must be at most {MAX_STEP_BATCH}")));
                }
                for _ in 0..n {
                    if self.active.as_ref().is_some_and(|a| a.run.ended().is_some()) {
                        break;
                    }
                    self.step_once();
                }
                let run = &self.require_loaded(id)?.run;
                Self::ok(
                    id,
                    json!({
                        "t": run.world().time(),
                        "step_index": run.world().step_index(),
                        "ended": run.ended().map(|r| r.as_str()),
                    }),
                )
            }
            Request::SetControl { throttle, brake, steer, gear } => {
                self.require_controller(session, id)?;
                let k = self.require_loaded(id)?.run.world().step_index();
                self.controls = Controls::clamped(throttle, brake, steer, gear);
                Self::ok(id, json!({"applies_at_step": k + 1}))
            }
            Request::GetState {} => {
                let run = &self.require_loaded(id)?.run;
                let w = run.world();
                let signals: Vec<Value> = w
                    .signal_states()
                    .into_iter()
                    .map(|(from, to, st)| json!({"from_lane": from, "to_lane": to, "state": st}))
                    .collect();
                let mut payload = json!({
                    "scenario_id": run.scenario().spec.id,
                    "seed": run.seed(),
                    "t": w.time(),
                    "step_index": w.step_index(),
                    "ended": run.ended().map(|r| r.as_str()),
                    "vehicles": FcdFrame::snapshot(w),
                    "signals": signals,
                });
                if let (Value::Object(p), Value::Object(m)) = (&mut payload, self.mode_json()) {
                    p.extend(m);
                }
                Ok(Message::new(id, "state", payload))
            }
            Request::Subscribe { channels } => {
                let s = self.sessions.get_mut(&session).expect("frames come from open sessions");
                s.channels = channels.into_iter().collect();
                Self::ok(id, json!({"channels": s.channels}))
            }
            Request::EndRun {} => {
                self.require_controller(session, id)?;
                self.require_loaded(id)?;
                let ended = self.active.as_mut().and_then(|a| a.run.end_run());
                if let Some(e) = ended {
                    self.record(&LogRecord::Evt(e.clone()));
                    self.broadcast(Channel::Events, &Self::event_push(&e));
                    self.finish_log();
                }
                let run = &self.require_loaded(id)?.run;
                Self::ok(
                    id,
                    json!({
                        "reason": run.ended().map(|r| r.as_str()),
                        "outcome": run.outcome().ok(),
                    }),
                )
            }
        }
    }

    fn mode_json(&self) -> Value {
        match self.mode {
            Mode::Stepped => json!({"mode": "stepped"}),
            Mode::Realtime { rate_hz } => json!({"mode": "realtime", "rate_hz": rate_hz}),
        }
    }

    fn hello(&mut self, session: SessionId, id: u64, version: &str, role: Option<Role>) -> Reply {
        if major_version(version) != Some(PROTOCOL_MAJOR) {
            return Err(Message::error(
                id,
                ErrorCode::VersionMismatch,
                format!("server speaks {PROTOCOL_VERSION}, client asked for {version:?}"),
            ));
        }
        let wanted = role.unwrap_or(Role::Controller);
        let mut reason = None;
        let granted = match wanted {
            Role::Controller if self.controller.is_none() || self.controller == Some(session) => {
                self.controller = Some(session);
                Role::Controller
            }
            Role::Controller => {
                reason = Some("another session holds the controller role; joined as observer");
                Role::Observer
            }
            Role::Observer => {
                if self.controller == Some(session) {
                    self.controller = None;
                }
                Role::Observer
            }
        };
        let s = self.sessions.get_mut(&session).expect("frames come from open sessions");
        s.greeted = true;
        s.role = granted;
        let mut payload = json!({"version": PROTOCOL_VERSION, "role": granted, "session": session});
        if let Some(r) = reason {
            payload["reason"] = r.into();
        }
        Ok(Message::new(id, "welcome", payload))
    }

    fn load(&mut self, id: u64, sid: &str, seed: u64) -> Reply {
        let entry = self
            .catalog
            .iter()
            .find(|e| e.id == sid)
            .ok_or_else(|| Message::error(id, ErrorCode::NotLoaded, format!("no scenario with id {sid:?}")))?;
        let run = LoadedScenario::from_file(&entry.path)
            .and_then(|s| ScenarioRun::new(s, seed))
            .map_err(|e| Message::error(id, ErrorCode::NotLoaded, e.to_string()))?;
        self.finish_log();
        let log = self.open_log(&run);
        let payload = json!({
            "scenario_id": run.scenario().spec.id,
            "seed": seed,
            "duration_s": run.scenario().spec.duration_s,
            "t": run.world().time(),
            "step_index": run.world().step_index(),
        });
        self.active = Some(Active { run, log });
        self.controls = Controls::default();
        self.pacer = Pacer::new();
        Self::ok(id, payload)
    }
}
