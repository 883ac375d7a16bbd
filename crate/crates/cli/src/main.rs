//! `precrash`: run scenarios, verify and export logs, analyze study data,
//! benchmark throughput, serve the control protocol.

mod analyze;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use precrash_core::bench::{self, BenchConfig};
use precrash_core::datalog::{export_csv, replay, LogSink, LogWriter, MemorySink, RunLog, Selector};
use precrash_core::scenario::{run_scenario, DefensiveEgo, EgoController, LoadedScenario, NoopEgo};

#[derive(Parser)]
#[command(name = "precrash", version, about = "Deterministic pre-crash traffic co-simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum EgoKind {
    Noop,
    Defensive,
    /// Serve the scenario and let a protocol client drive.
    Server,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; prints the outcome as JSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "noop")]
        ego: EgoKind,
        /// FCD log destination (`.run.jsonl`).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = precrash_server::DEFAULT_PORT)]
        port: u16,
    },
    /// Re-simulate a log; `--verify` fails on any divergence.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Flatten a log's frames to CSV.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        vehicle: Option<String>,
    },
    /// Questionnaire and significance analysis.
    Analyze {
        #[command(subcommand)]
        what: analyze::AnalyzeCmd,
    },
    /// Step-rate sweep over vehicle counts; writes CSV.
    Bench {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,200,400")]
        vehicles: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ego_speed_cap: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Control server on TCP, with WebSocket upgrade on `/ws`.
    Serve {
        #[arg(long, default_value = "fixtures/scenarios")]
        scenarios: PathBuf,
        #[arg(long, default_value_t = precrash_server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Write a `.run.jsonl` log per loaded scenario into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn cmd_run(scenario: PathBuf, seed: u64, ego: EgoKind, log: Option<PathBuf>, port: u16) -> Res {
    let loaded = LoadedScenario::from_file(&scenario)?;
    let mut controller: Box<dyn EgoController> = match ego {
        EgoKind::Noop => Box::new(NoopEgo),
        EgoKind::Defensive => Box::new(DefensiveEgo::default()),
        EgoKind::Server => {
            let dir = scenario.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
            log::info!("serving {} on port {port}", dir.display());
            return precrash_server::serve(&format!("127.0.0.1:{port}"), precrash_server::ServerConfig::new(dir))
                .map_err(Into::into);
        }
    };
    let outcome = match log {
        Some(path) => {
            let mut w = LogWriter::create(&path)?;
            let o = run_scenario(&loaded, seed, controller.as_mut(), &mut w)?;
            w.finish()?;
            o
        }
        None => {
            let mut sink = MemorySink::default();
            run_scenario(&loaded, seed, controller.as_mut(), &mut sink as &mut dyn LogSink)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(())
}

fn cmd_replay(path: PathBuf, verify: bool) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let log = RunLog::open(&path)?;
    match replay(&log, Some(&path)) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::json!({
                    "steps": report.steps,
                    "lines_compared": report.lines_compared,
                    "divergence": null,
                    "outcome": report.outcome,
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(precrash_core::datalog::LogError::DivergenceDetected { step, expected, found })
            if !verify =>
        {
            println!(
                "{}",
                serde_json::json!({"divergence": {"step": step, "expected": expected, "found": found}})
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_export(log: PathBuf, csv: PathBuf, vehicle: Option<String>) -> Res {
    let run = RunLog::open(&log)?;
    let out = std::io::BufWriter::new(std::fs::File::create(&csv)?);
    let rows = export_csv(&run, &Selector { vehicle_id: vehicle }, out)?;
    eprintln!("wrote {rows} rows to {}", csv.display());
    Ok(())
}

fn cmd_bench(
    network: PathBuf,
    vehicles: Vec<usize>,
    steps: u64,
    seed: u64,
    ego_speed_cap: Option<f64>,
    out: Option<PathBuf>,
) -> Res {
    let text = std::fs::read_to_string(&network)?;
    let net = std::sync::Arc::new(precrash_core::network::parse_network(&text)?);
    let mut cfg = BenchConfig::new(net, vehicles, steps, seed);
    cfg.ego_speed_cap = ego_speed_cap;
    let rows = bench::run_bench(&cfg, |msg| eprintln!("{msg}"))?;
    match out {
        Some(p) => bench::write_csv(&rows, std::fs::File::create(p)?)?,
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res: Result<ExitCode, Box<dyn std::error::Error>> = match cli.cmd {
        Cmd::Run { scenario, seed, ego, log, port } => {
            cmd_run(scenario, seed, ego, log, port).map(|_| ExitCode::SUCCESS)
        }
        Cmd::Replay { log, verify } => cmd_replay(log, verify),
        Cmd::Export { log, csv, vehicle } => cmd_export(log, csv, vehicle).map(|_| ExitCode::SUCCESS),
        Cmd::Analyze { what } => analyze::run(what).map(|_| ExitCode::SUCCESS),
        Cmd::Bench { network, vehicles, steps, seed, ego_speed_cap, out } => {
            cmd_bench(network, vehicles, steps, seed, ego_speed_cap, out).map(|_| ExitCode::SUCCESS)
        }
        Cmd::Serve { scenarios, port, bind, log_dir } => precrash_server::serve(
            &format!("{bind}:{port}"),
            precrash_server::ServerConfig { log_dir, ..precrash_server::ServerConfig::new(scenarios) },
        )
        .map(|_| ExitCode::SUCCESS)
        .map_err(Into::into),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
