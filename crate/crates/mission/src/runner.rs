use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::thread::JoinHandle;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use skyweave_dcu::{solve_update, verify_update, DcuError, UpdateProblem, UpdateSolution};
use skyweave_enactor::{Dir, Enactable, Enactor, FallbackPlan, ModuleChange, ModuleDecl, Mode, Record, Swap};
use skyweave_fltl::FluentDef;
use skyweave_lang::{library_fluents, load, Context, Model, UPDATE_EVENTS};
use skyweave_lts::{Label, Lts};
use skyweave_simworld::{Visit, World};
use skyweave_synthesis::{parse_table, synthesize, to_table, verify, ControlProblem, Stats};

use crate::checks::{evaluate, RunView};
use crate::scenario::{Action, Check, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("step {step:?}: specification errors:\n{}", diagnostics.join("\n"))]
    Spec { step: Option<usize>, diagnostics: Vec<String> },
    #[error("step {step:?}: {problem} is unrealizable")]
    Unrealizable { step: Option<usize>, problem: String },
    #[error("step {step:?}: {problem} fails verification: {detail}")]
    Verification { step: Option<usize>, problem: String, detail: String },
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
    #[error("world: {0}")]
    World(String),
}

impl ScenarioError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Unrealizable { .. } => 2,
            ScenarioError::Verification { .. } => 3,
            _ => 1,
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            ScenarioError::Spec { step, .. } | ScenarioError::Unrealizable { step, .. } | ScenarioError::Verification { step, .. } => *step,
            ScenarioError::Step { step, .. } => Some(*step),
            ScenarioError::World(_) => None,
        }
    }
}

/// Cost of one synthesis. Wall time varies between runs and is kept out of
/// the event log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthMetric {
    pub what: String,
    pub wall_ms: f64,
    pub arena_states: usize,
    pub arena_edges: usize,
    pub controller_states: usize,
    /// Rough bytes held by the arena and solver.
    pub memory_estimate: usize,
}

impl SynthMetric {
    pub fn new(what: &str, started: Instant, stats: &Stats) -> SynthMetric {
        SynthMetric {
            what: what.to_string(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            arena_states: stats.arena_states,
            arena_edges: stats.arena_edges,
            controller_states: stats.controller_states,
            memory_estimate: stats.arena_states * 48 + stats.arena_edges * 16,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub step: usize,
    pub tick: u64,
    pub check: Check,
    pub ok: bool,
    pub detail: String,
}

/// Everything a run produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: u64,
    pub ticks: u64,
    /// Enactment log, one record per line.
    pub log: Vec<String>,
    pub visits: Vec<Visit>,
    /// Controller tables in swap order, then the fallback plan.
    pub controllers: Vec<String>,
    pub fallback: String,
    pub metrics: Vec<SynthMetric>,
    pub verdicts: Vec<Verdict>,
    /// Commands the world refused.
    pub refusals: Vec<String>,
    pub final_mode: String,
}

impl RunRecord {
    pub fn id(&self) -> String {
        format!("{}-{}", self.scenario, self.seed)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.ok)
    }

    pub fn log_text(&self) -> String {
        let mut s = self.log.join("\n");
        s.push('\n');
        s
    }

    pub fn records(&self) -> Vec<Record> {
        self.log.iter().filter_map(|l| Record::parse(l)).collect()
    }

    /// Writes `<id>.json` and `<id>.log` under `dir`.
    pub fn save(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let p = dir.join(format!("{}.json", self.id()));
        std::fs::write(&p, serde_json::to_string_pretty(self).expect("serialisable record"))?;
        std::fs::write(dir.join(format!("{}.log", self.id())), self.log_text())?;
        Ok(p)
    }

    pub fn load(path: &Path) -> std::io::Result<RunRecord> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// Feeds the log through the recorded controllers and checks every
    /// state it claims.
    pub fn replay(&self) -> Result<(), String> {
        let parse = |t: &str| parse_table(t).map(|x| x.1).map_err(|e| e.to_string());
        let ctrls: Vec<Lts> = self.controllers.iter().map(|t| parse(t)).collect::<Result<_, _>>()?;
        let fallback = parse(&self.fallback)?;
        let mut cur: &Lts = ctrls.first().ok_or("no controller")?;
        let mut version = 0;
        let mut state = cur.initial();
        for (i, r) in self.records().iter().enumerate() {
            let at = |m: &str| format!("record {i} ({r}): {m}");
            if r.before != state {
                return Err(at(&format!("expected state {state}")));
            }
            match r.dir {
                Dir::In | Dir::Out => {
                    let next = cur.step(state, &r.label).map_err(|e| at(&e.to_string()))?;
                    if !next.contains(&r.after) {
                        return Err(at("not a transition"));
                    }
                    state = r.after;
                }
                Dir::Swap => {
                    version += 1;
                    cur = ctrls.get(version).ok_or_else(|| at("no controller for this swap"))?;
                    if (r.after as usize) >= cur.num_states() {
                        return Err(at("no such state"));
                    }
                    state = r.after;
                }
                Dir::Fallback => {
                    cur = &fallback;
                    state = r.after;
                }
                Dir::Absorbed | Dir::Landed | Dir::Rejected | Dir::Modules => {
                    if r.after != state {
                        return Err(at("state changed"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses and resolves a spec.
pub fn load_model(text: &str, step: Option<usize>) -> Result<Model, ScenarioError> {
    load(text, &Context::default())
        .map(|x| x.1)
        .map_err(|d| ScenarioError::Spec { step, diagnostics: d.iter().map(ToString::to_string).collect() })
}

/// Synthesises and verifies a control problem.
pub fn synthesize_problem(model: &Model, name: &str, step: Option<usize>) -> Result<(ControlProblem, skyweave_synthesis::Controller, SynthMetric), ScenarioError> {
    let spec_err = |e: &dyn std::fmt::Display| ScenarioError::Spec { step, diagnostics: vec![e.to_string()] };
    let t = Instant::now();
    let p = ControlProblem::from_model(model, name).map_err(|e| spec_err(&e))?;
    let s = synthesize(&p).map_err(|e| spec_err(&e))?;
    let metric = SynthMetric::new(name, t, &s.stats);
    let c = s.controller.ok_or_else(|| ScenarioError::Unrealizable { step, problem: name.to_string() })?;
    let (_, v) = verify(&p, &c.lts).map_err(|e| spec_err(&e))?;
    if !v.ok() {
        return Err(ScenarioError::Verification { step, problem: name.to_string(), detail: format!("{v:?}") });
    }
    Ok((p, c, metric))
}

/// Solves and verifies an update of the running controller `c`.
pub fn solve_update_problem(model: &Model, name: &str, c: &Lts, step: Option<usize>) -> Result<(UpdateSolution, SynthMetric), ScenarioError> {
    let spec_err = |e: &dyn std::fmt::Display| ScenarioError::Spec { step, diagnostics: vec![e.to_string()] };
    let t = Instant::now();
    let up = UpdateProblem::from_model(model, name).map_err(|e| spec_err(&e))?;
    let sol = match solve_update(&up, c) {
        Ok(s) => s,
        Err(DcuError::Unrealizable) => return Err(ScenarioError::Unrealizable { step, problem: name.to_string() }),
        Err(e) => return Err(ScenarioError::Verification { step, problem: name.to_string(), detail: e.to_string() }),
    };
    let metric = SynthMetric::new(name, t, &sol.stats);
    let (_, v) = verify_update(&sol).map_err(|e| spec_err(&e))?;
    if !v.ok() {
        return Err(ScenarioError::Verification { step, problem: name.to_string(), detail: format!("{v:?}") });
    }
    Ok((sol, metric))
}

pub fn is_update_event(l: &Label) -> bool {
    UPDATE_EVENTS.contains(&l.as_str())
}

/// Registers the world's modules with the enactor and mirrors its bindings.
pub fn register_modules(world: &World, en: &mut Enactor) {
    for (id, commands) in world.declarations() {
        en.modules.upload(ModuleDecl { id, commands });
    }
    for id in world.bound().clone() {
        let _ = en.modules.bind(&id);
    }
}

/// Makes the world's bindings follow the enactor's after a manifest.
pub fn sync_bindings(en: &Enactor, world: &mut World) -> Vec<String> {
    let want = en.modules.bound().clone();
    let have = world.bound().clone();
    let mut errors = Vec::new();
    for id in have.difference(&want) {
        world.unbind(id);
    }
    for id in want.difference(&have) {
        if let Err(e) = world.bind(id) {
            errors.push(e.to_string());
        }
    }
    errors
}

/// An update solution, its metric and the fluents of its spec.
type Solved = (UpdateSolution, SynthMetric, Vec<FluentDef>);

struct PendingUpdate {
    step: usize,
    ready: u64,
    manifest: Vec<ModuleChange>,
    worker: JoinHandle<Result<Solved, ScenarioError>>,
}

/// Runs a scenario to its tick budget. Deterministic for a fixed seed.
pub fn run_scenario(sc: &Scenario) -> Result<RunRecord, ScenarioError> {
    let model = load_model(&sc.spec, None)?;
    let (_, ctrl, metric) = synthesize_problem(&model, &sc.problem, None)?;
    let mut metrics = vec![metric];
    let mut fluents: Vec<FluentDef> = library_fluents();
    fluents.extend(model.fluents.iter().cloned());
    let mut world = World::from_config(&sc.world).map_err(|e| ScenarioError::World(e.to_string()))?;
    let fallback = match sc.home {
        Some(h) => FallbackPlan::return_and_land(h),
        None => FallbackPlan::land_in_place(),
    };
    let fallback_table = to_table("fallback", &fallback.controller.lts);
    let mut en = Enactor::new(Enactable::from_controller(&ctrl), fallback);
    register_modules(&world, &mut en);
    let mut controllers = vec![to_table(&sc.problem, &ctrl.lts)];
    let mut verdicts = Vec::new();
    let mut refusals = Vec::new();
    let mut pending: Option<PendingUpdate> = None;
    let mut next = 0;

    for t in 1..=sc.ticks {
        let mut asserts = Vec::new();
        while next < sc.steps.len() && sc.steps[next].tick == t {
            let i = next;
            next += 1;
            match &sc.steps[i].action {
                Action::Inject(e) => {
                    let l = Label::new(e).map_err(|err| ScenarioError::Step { step: i, message: err.to_string() })?;
                    en.push(l);
                }
                Action::Upload(m) => {
                    world.upload(m).map_err(|e| ScenarioError::Step { step: i, message: e.to_string() })?;
                    en.modules.upload(ModuleDecl { id: m.id().to_string(), commands: world.declarations().into_iter().find(|d| d.0 == m.id()).map(|d| d.1).unwrap_or_default() });
                }
                Action::Update { problem, spec, ready_after, manifest } => {
                    if pending.is_some() || en.has_pending_swap() {
                        return Err(ScenarioError::Step { step: i, message: "an update is already in progress".into() });
                    }
                    if en.mode() != Mode::Running {
                        return Err(ScenarioError::Step { step: i, message: format!("cannot update while {}", en.mode().as_str()) });
                    }
                    let (problem, spec, c) = (problem.clone(), spec.clone(), en.controller().lts.clone());
                    let worker = std::thread::spawn(move || {
                        let m = load_model(&spec, Some(i))?;
                        let (sol, metric) = solve_update_problem(&m, &problem, &c, Some(i))?;
                        Ok((sol, metric, m.fluents.clone()))
                    });
                    pending = Some(PendingUpdate { step: i, ready: t + ready_after, manifest: manifest.clone(), worker });
                }
                Action::Assert(c) => asserts.push((i, c.clone())),
            }
        }
        if pending.as_ref().is_some_and(|p| p.ready <= t) {
            let p = pending.take().unwrap();
            let (sol, metric, fl) = p.worker.join().map_err(|_| ScenarioError::Step { step: p.step, message: "synthesis worker panicked".into() })??;
            metrics.push(metric);
            fluents.extend(fl);
            controllers.push(to_table(&sol.problem.name, &sol.new_lts));
            en.request_swap(Swap::from_update(&sol, p.manifest)).map_err(|e| ScenarioError::Step { step: p.step, message: e.to_string() })?;
        }
        for e in world.step() {
            en.push(e);
        }
        let cmds = en.tick();
        refusals.extend(sync_bindings(&en, &mut world));
        for c in cmds {
            if is_update_event(&c) {
                continue;
            }
            match world.dispatch(&c) {
                Ok(evs) => evs.into_iter().for_each(|e| en.push(e)),
                Err(e) => {
                    refusals.push(format!("{t} {c}: {e}"));
                    en.on_unexpected(&c);
                }
            }
        }
        for (i, c) in asserts {
            let bound: BTreeSet<String> = world.bound().clone();
            let view = RunView { log: en.log(), visits: world.visits(), grid: &world.grid, mode: en.mode().as_str(), bound: &bound, fluents: &fluents, now: t };
            let r = evaluate(&c, &view);
            verdicts.push(Verdict { step: i, tick: t, check: c, ok: r.is_ok(), detail: r.err().unwrap_or_default() });
        }
    }
    if let Some(p) = pending {
        return Err(ScenarioError::Step { step: p.step, message: "update still pending at the end of the run".into() });
    }
    Ok(RunRecord {
        scenario: sc.name.clone(),
        seed: sc.seed,
        ticks: sc.ticks,
        log: en.log().iter().map(ToString::to_string).collect(),
        visits: world.visits().to_vec(),
        controllers,
        fallback: fallback_table,
        metrics,
        verdicts,
        refusals,
        final_mode: en.mode().as_str().to_string(),
    })
}
