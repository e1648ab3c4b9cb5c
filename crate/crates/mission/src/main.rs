use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skyweave_lang::Model;
use skyweave_mission::runner::{load_model, synthesize_problem};
use skyweave_mission::service::{serve, ServiceConfig};
use skyweave_mission::{run_scenario, Scenario, ScenarioError};
use skyweave_simworld::WorldConfig;
use skyweave_synthesis::{parse_table, to_table, verify, ControlProblem};

#[derive(Parser)]
#[command(name = "skyweave", about = "Discrete controller synthesis and hot-swapping for simulated UAV missions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario directory and check its assertions.
    Run {
        dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the run record.
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
    /// Synthesise a controller for a control problem.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-check a controller table against a control problem.
    Verify {
        spec: PathBuf,
        controller: PathBuf,
        #[arg(long)]
        problem: Option<String>,
    },
    /// Start the HTTP/WebSocket service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// World configuration (TOML).
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        sim_speed: f64,
        #[arg(long)]
        auto_hotswap: bool,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Cell the fallback plan returns to before landing.
        #[arg(long)]
        home: Option<u32>,
    },
}

#[derive(Debug)]
enum Failure {
    Scenario(ScenarioError),
    Assertions(usize),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Scenario(e) => e.exit_code() as u8,
            Failure::Assertions(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Failure {
        Failure::Scenario(e)
    }
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))
}

fn pick_problem(model: &Model, problem: Option<String>) -> Result<String, Failure> {
    match problem {
        Some(p) => Ok(p),
        None => model.control.first().map(|c| c.name.clone()).ok_or_else(|| Failure::Other("the spec declares no control problem".into())),
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { dir, seed, runs } => {
            let mut sc = Scenario::load(&dir).map_err(|e| Failure::Other(e.to_string()))?;
            if let Some(s) = seed {
                sc.seed = s;
                sc.world.seed = s;
            }
            let rec = run_scenario(&sc)?;
            for m in &rec.metrics {
                println!("synth {} {:.1} ms, {} arena states, {} controller states", m.what, m.wall_ms, m.arena_states, m.controller_states);
            }
            for v in &rec.verdicts {
                println!("{} step {} tick {}: {:?}{}", if v.ok { "PASS" } else { "FAIL" }, v.step, v.tick, v.check, if v.ok { String::new() } else { format!(" ({})", v.detail) });
            }
            let path = rec.save(&runs).map_err(|e| Failure::Other(e.to_string()))?;
            println!("run {} final mode {} saved to {}", rec.id(), rec.final_mode, path.display());
            let failed = rec.verdicts.iter().filter(|v| !v.ok).count();
            if failed > 0 {
                return Err(Failure::Assertions(failed));
            }
            Ok(())
        }
        Cmd::Synth { spec, problem, out } => {
            let model = load_model(&read(&spec)?, None)?;
            let name = pick_problem(&model, problem)?;
            let (_, c, m) = synthesize_problem(&model, &name, None)?;
            println!("{name}: realizable, {} controller states, {} arena states, {:.1} ms", m.controller_states, m.arena_states, m.wall_ms);
            let table = to_table(&name, &c.lts);
            match out {
                Some(p) => std::fs::write(&p, table).map_err(|e| Failure::Other(e.to_string()))?,
                None => print!("{table}"),
            }
            Ok(())
        }
        Cmd::Verify { spec, controller, problem } => {
            let model = load_model(&read(&spec)?, None)?;
            let name = pick_problem(&model, problem)?;
            let p = ControlProblem::from_model(&model, &name).map_err(|e| Failure::Other(e.to_string()))?;
            let (_, lts) = parse_table(&read(&controller)?).map_err(|e| Failure::Other(e.to_string()))?;
            let (_, v) = verify(&p, &lts).map_err(|e| Failure::Other(e.to_string()))?;
            if !v.ok() {
                return Err(Failure::Scenario(ScenarioError::Verification { step: None, problem: name, detail: format!("{v:?}") }));
            }
            println!("{name}: controller verified, {} closed-loop states", v.states);
            Ok(())
        }
        Cmd::Serve { bind, world, spec, problem, seed, sim_speed, auto_hotswap, runs, home } => {
            let mut wc = WorldConfig::parse(&read(&world)?).map_err(|e| Failure::Other(e.to_string()))?;
            if let Some(s) = seed {
                wc.seed = s;
            }
            let mut cfg = ServiceConfig::new(wc);
            cfg.sim_speed = sim_speed;
            cfg.auto_hotswap = auto_hotswap;
            cfg.runs_dir = runs;
            cfg.home = home;
            if let Some(s) = spec {
                let text = read(&s)?;
                let name = pick_problem(&load_model(&text, None)?, problem)?;
                cfg.mission = Some((text, name));
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Other(e.to_string()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve(cfg, listener).await
            })
            .map_err(|e| Failure::Other(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Scenario(e) => eprintln!("error: {e}"),
                Failure::Assertions(n) => eprintln!("{n} assertion(s) failed"),
                Failure::Other(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
