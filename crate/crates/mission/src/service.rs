//! HTTP and WebSocket front end. One thread owns the world and the
//! enactor; handlers talk to it through a command queue, and synthesis runs
//! on a worker thread.

use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use skyweave_dcu::{UpdateProblem, UpdateSolution};
use skyweave_enactor::{Enactable, Enactor, FallbackPlan, ModuleChange, ModuleDecl, Swap};
use skyweave_lang::Model;
use skyweave_lts::{Label, Lts};
use skyweave_simworld::{ModuleSpec, World, WorldConfig};
use skyweave_synthesis::Controller;
use tokio::sync::{broadcast, oneshot};

use crate::runner::{is_update_event, load_model, register_modules, solve_update_problem, sync_bindings, synthesize_problem, ScenarioError, SynthMetric};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub world: WorldConfig,
    /// Spec text and control problem to fly from the start.
    pub mission: Option<(String, String)>,
    /// Simulated seconds per wall second.
    pub sim_speed: f64,
    /// Swap as soon as an update is ready.
    pub auto_hotswap: bool,
    pub runs_dir: PathBuf,
    pub home: Option<u32>,
}

impl ServiceConfig {
    pub fn new(world: WorldConfig) -> ServiceConfig {
        ServiceConfig { world, mission: None, sim_speed: 1.0, auto_hotswap: false, runs_dir: PathBuf::from("runs"), home: None }
    }
}

/// One WebSocket message.
#[derive(Clone, Debug, Serialize)]
pub struct Frame {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub payload: Value,
}

fn frame(kind: &'static str, payload: Value) -> Frame {
    Frame { kind, payload }
}

/// Request failure: status plus JSON body.
#[derive(Debug)]
pub struct ApiError(StatusCode, Value);

impl ApiError {
    fn bad(msg: impl Into<String>) -> ApiError {
        ApiError(StatusCode::BAD_REQUEST, json!({ "error": msg.into() }))
    }

    fn conflict(msg: &str) -> ApiError {
        ApiError(StatusCode::CONFLICT, json!({ "error": msg }))
    }

    fn spec(e: ScenarioError) -> ApiError {
        match e {
            ScenarioError::Spec { diagnostics, .. } => ApiError(StatusCode::BAD_REQUEST, json!({ "error": "invalid specification", "diagnostics": diagnostics })),
            other => ApiError::bad(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type Reply = oneshot::Sender<Result<Value, ApiError>>;

enum Cmd {
    Spec { text: String, problem: Option<String>, reply: Reply },
    Update { text: String, name: String, manifest: Vec<ModuleChange>, reply: Reply },
    Hotswap { reply: Reply },
    Module { spec: ModuleSpec, bind: bool, reply: Reply },
    Command { label: String, reply: Reply },
    State { reply: Reply },
}

enum Job {
    Mission { name: String, result: Result<(Controller, SynthMetric), ScenarioError> },
    Update { name: String, manifest: Vec<ModuleChange>, result: Result<Box<(UpdateSolution, SynthMetric)>, ScenarioError> },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum SynthStatus {
    Idle,
    Running { name: String },
    Ready { name: String },
    Unrealizable { name: String },
    Failed { name: String, diagnostic: String },
    Swapped { name: String },
}

/// State owned by the simulation thread.
struct Sim {
    cfg: ServiceConfig,
    world: World,
    enactor: Option<Enactor>,
    model: Option<Model>,
    problem: Option<String>,
    status: SynthStatus,
    ready: Option<(UpdateSolution, Vec<ModuleChange>)>,
    worker_busy: bool,
    jobs_tx: Sender<Job>,
    jobs_rx: Receiver<Job>,
    frames: broadcast::Sender<Frame>,
    logged: usize,
}

impl Sim {
    fn publish(&self, f: Frame) {
        let _ = self.frames.send(f);
    }

    fn fallback(&self) -> FallbackPlan {
        match self.cfg.home {
            Some(h) => FallbackPlan::return_and_land(h),
            None => FallbackPlan::land_in_place(),
        }
    }

    fn install(&mut self, c: &Controller) {
        let mut en = Enactor::new(Enactable::from_controller(c), self.fallback());
        register_modules(&self.world, &mut en);
        self.enactor = Some(en);
        self.logged = 0;
    }

    fn busy(&self) -> bool {
        self.worker_busy || self.enactor.as_ref().is_some_and(Enactor::has_pending_swap)
    }

    fn spawn_mission(&mut self, model: Model, name: String) {
        self.worker_busy = true;
        self.status = SynthStatus::Running { name: name.clone() };
        self.publish(frame("synth-progress", json!({ "job": "mission", "name": name, "stage": "started" })));
        let tx = self.jobs_tx.clone();
        std::thread::spawn(move || {
            let result = synthesize_problem(&model, &name, None).map(|(_, c, m)| (c, m));
            let _ = tx.send(Job::Mission { name, result });
        });
    }

    fn handle(&mut self, cmd: Cmd) {
        match cmd {
            Cmd::State { reply } => {
                let _ = reply.send(Ok(self.state()));
            }
            Cmd::Spec { text, problem, reply } => {
                let r = (|| {
                    let model = load_model(&text, None).map_err(ApiError::spec)?;
                    if let Some(p) = &problem {
                        if model.control_problem(p).is_none() {
                            return Err(ApiError::bad(format!("no control problem named {p}")));
                        }
                        if self.busy() {
                            return Err(ApiError::conflict("busy"));
                        }
                        self.spawn_mission(model.clone(), p.clone());
                    }
                    let problems: Vec<&str> = model.control.iter().map(|c| c.name.as_str()).chain(model.updates.iter().map(|u| u.name.as_str())).collect();
                    let body = json!({ "status": if problem.is_some() { "queued" } else { "stored" }, "problems": problems });
                    self.model = Some(model);
                    Ok(body)
                })();
                let _ = reply.send(r);
            }
            Cmd::Update { text, name, manifest, reply } => {
                let r = (|| {
                    let model = load_model(&text, None).map_err(ApiError::spec)?;
                    UpdateProblem::from_model(&model, &name).map_err(|e| ApiError(StatusCode::BAD_REQUEST, json!({ "error": "invalid update", "diagnostics": [e.to_string()] })))?;
                    if self.busy() {
                        return Err(ApiError::conflict("busy"));
                    }
                    let en = self.enactor.as_ref().ok_or_else(|| ApiError::conflict("no mission is running"))?;
                    if en.mode() != skyweave_enactor::Mode::Running {
                        return Err(ApiError::conflict("the vehicle is in fallback"));
                    }
                    let c: Lts = en.controller().lts.clone();
                    self.ready = None;
                    self.worker_busy = true;
                    self.status = SynthStatus::Running { name: name.clone() };
                    self.publish(frame("synth-progress", json!({ "job": "update", "name": name, "stage": "started" })));
                    let tx = self.jobs_tx.clone();
                    let n = name.clone();
                    std::thread::spawn(move || {
                        let result = solve_update_problem(&model, &n, &c, None).map(Box::new);
                        let _ = tx.send(Job::Update { name: n, manifest, result });
                    });
                    Ok(json!({ "status": "queued", "name": name }))
                })();
                let _ = reply.send(r);
            }
            Cmd::Hotswap { reply } => {
                let _ = reply.send(self.hotswap());
            }
            Cmd::Module { spec, bind, reply } => {
                let r = (|| {
                    self.world.upload(&spec).map_err(|e| ApiError::bad(e.to_string()))?;
                    let commands = self.world.declarations().into_iter().find(|d| d.0 == spec.id()).map(|d| d.1).unwrap_or_default();
                    if let Some(en) = self.enactor.as_mut() {
                        en.modules.upload(ModuleDecl { id: spec.id().to_string(), commands });
                        if bind {
                            en.modules.bind(spec.id()).map_err(|e| ApiError::conflict(&e.to_string()))?;
                        }
                    }
                    if bind {
                        self.world.bind(spec.id()).map_err(|e| ApiError::conflict(&e.to_string()))?;
                    }
                    Ok(json!({ "id": spec.id(), "bound": self.world.bound() }))
                })();
                let _ = reply.send(r);
            }
            Cmd::Command { label, reply } => {
                let r = (|| {
                    let l = Label::new(&label).map_err(|e| ApiError::bad(e.to_string()))?;
                    let en = self.enactor.as_ref().ok_or_else(|| ApiError::conflict("no mission is running"))?;
                    en.push(l);
                    Ok(json!({ "status": "queued", "label": label }))
                })();
                let _ = reply.send(r);
            }
        }
    }

    fn hotswap(&mut self) -> Result<Value, ApiError> {
        let en = self.enactor.as_mut().ok_or_else(|| ApiError::conflict("no mission is running"))?;
        let (sol, manifest) = self.ready.take().ok_or_else(|| ApiError::conflict("no update is ready"))?;
        let name = sol.problem.name.clone();
        if let Err(e) = en.request_swap(Swap::from_update(&sol, manifest.clone())) {
            self.ready = Some((sol, manifest));
            return Err(ApiError::conflict(&e.to_string()));
        }
        self.status = SynthStatus::Swapped { name: name.clone() };
        Ok(json!({ "status": "requested", "name": name }))
    }

    fn finish(&mut self, job: Job) {
        self.worker_busy = false;
        match job {
            Job::Mission { name, result } => match result {
                Ok((c, m)) => {
                    self.install(&c);
                    self.problem = Some(name.clone());
                    self.status = SynthStatus::Idle;
                    self.publish(frame("verdict", json!({ "job": "mission", "name": name, "status": "ready", "metrics": m })));
                }
                Err(e) => self.failed("mission", name, e),
            },
            Job::Update { name, manifest, result } => match result {
                Ok(solved) => {
                    let (sol, m) = *solved;
                    self.status = SynthStatus::Ready { name: name.clone() };
                    self.ready = Some((sol, manifest));
                    self.publish(frame("verdict", json!({ "job": "update", "name": name, "status": "ready", "metrics": m })));
                    if self.cfg.auto_hotswap {
                        let r = self.hotswap();
                        if let Err(ApiError(_, body)) = r {
                            self.publish(frame("verdict", json!({ "job": "hotswap", "name": name, "status": "error", "diagnostic": body })));
                        }
                    }
                }
                Err(e) => self.failed("update", name, e),
            },
        }
    }

    fn failed(&mut self, job: &str, name: String, e: ScenarioError) {
        let (status, diag) = match &e {
            ScenarioError::Unrealizable { .. } => ("unrealizable", format!("{name} has no solution")),
            other => ("error", other.to_string()),
        };
        self.status = if status == "unrealizable" { SynthStatus::Unrealizable { name: name.clone() } } else { SynthStatus::Failed { name: name.clone(), diagnostic: diag.clone() } };
        self.publish(frame("verdict", json!({ "job": job, "name": name, "status": status, "diagnostic": diag })));
    }

    fn step(&mut self) {
        let events = self.world.step();
        if let Some(en) = self.enactor.as_mut() {
            for e in events {
                en.push(e);
            }
            let cmds = en.tick();
            sync_bindings(en, &mut self.world);
            for c in cmds {
                if is_update_event(&c) {
                    continue;
                }
                match self.world.dispatch(&c) {
                    Ok(evs) => evs.into_iter().for_each(|e| en.push(e)),
                    Err(_) => en.on_unexpected(&c),
                }
            }
            let new: Vec<Frame> = en.log()[self.logged..]
                .iter()
                .map(|r| frame("event", json!({ "tick": r.tick, "dir": r.dir.as_str(), "label": r.label, "before": r.before, "after": r.after })))
                .collect();
            self.logged = en.log().len();
            for f in new {
                self.publish(f);
            }
        }
        self.publish(frame("telemetry", serde_json::to_value(self.world.telemetry()).expect("telemetry")));
    }

    fn state(&self) -> Value {
        let en = self.enactor.as_ref();
        json!({
            "tick": self.world.tick(),
            "problem": self.problem,
            "mode": en.map(|e| e.mode().as_str()),
            "state": en.map(Enactor::state),
            "version": en.map(Enactor::version),
            "pending_swap": en.is_some_and(Enactor::has_pending_swap),
            "synthesis": self.status,
            "telemetry": self.world.telemetry(),
            "bound": self.world.bound(),
            "modules": self.world.declarations().into_iter().map(|d| d.0).collect::<Vec<_>>(),
        })
    }
}

fn sim_loop(mut sim: Sim, rx: Receiver<Cmd>) {
    let period = Duration::from_secs_f64(sim.world.dt / sim.cfg.sim_speed.max(1e-6));
    let mut next = Instant::now();
    loop {
        loop {
            match rx.try_recv() {
                Ok(c) => sim.handle(c),
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        while let Ok(j) = sim.jobs_rx.try_recv() {
            sim.finish(j);
        }
        sim.step();
        next += period;
        let now = Instant::now();
        if next > now {
            std::thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

#[derive(Clone)]
struct AppState {
    tx: Sender<Cmd>,
    frames: broadcast::Sender<Frame>,
    runs: PathBuf,
}

/// Builds the router and starts the simulation thread, which stops once
/// the router is dropped.
pub fn app(cfg: ServiceConfig) -> Result<Router, String> {
    let world = World::from_config(&cfg.world).map_err(|e| e.to_string())?;
    let (frames, _) = broadcast::channel(4096);
    let (jobs_tx, jobs_rx) = mpsc::channel();
    let runs = cfg.runs_dir.clone();
    let mission = cfg.mission.clone();
    let mut sim = Sim {
        cfg,
        world,
        enactor: None,
        model: None,
        problem: None,
        status: SynthStatus::Idle,
        ready: None,
        worker_busy: false,
        jobs_tx,
        jobs_rx,
        frames: frames.clone(),
        logged: 0,
    };
    if let Some((text, problem)) = mission {
        let model = load_model(&text, None).map_err(|e| e.to_string())?;
        let (_, c, _) = synthesize_problem(&model, &problem, None).map_err(|e| e.to_string())?;
        sim.install(&c);
        sim.model = Some(model);
        sim.problem = Some(problem);
    }
    let (tx, rx) = mpsc::channel();
    std::thread::Builder::new().name("sim".into()).spawn(move || sim_loop(sim, rx)).map_err(|e| e.to_string())?;
    let state = AppState { tx, frames, runs };
    Ok(Router::new()
        .route("/spec", post(post_spec))
        .route("/update", post(post_update))
        .route("/hotswap", post(post_hotswap))
        .route("/module", post(post_module))
        .route("/command/{label}", post(post_command))
        .route("/state", get(get_state))
        .route("/runs/{id}", get(get_run))
        .route("/stream", get(stream))
        .with_state(state))
}

/// Serves until the listener fails.
pub async fn serve(cfg: ServiceConfig, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let router = app(cfg).map_err(std::io::Error::other)?;
    axum::serve(listener, router).await
}

async fn ask(s: &AppState, make: impl FnOnce(Reply) -> Cmd) -> Result<Json<Value>, ApiError> {
    let (tx, rx) = oneshot::channel();
    s.tx.send(make(tx)).map_err(|_| ApiError(StatusCode::SERVICE_UNAVAILABLE, json!({ "error": "simulation stopped" })))?;
    let v = rx.await.map_err(|_| ApiError(StatusCode::SERVICE_UNAVAILABLE, json!({ "error": "simulation stopped" })))??;
    Ok(Json(v))
}

#[derive(Deserialize)]
struct SpecQuery {
    problem: Option<String>,
}

async fn post_spec(State(s): State<AppState>, Query(q): Query<SpecQuery>, text: String) -> Result<(StatusCode, Json<Value>), ApiError> {
    let queued = q.problem.is_some();
    let v = ask(&s, |reply| Cmd::Spec { text, problem: q.problem, reply }).await?;
    Ok((if queued { StatusCode::ACCEPTED } else { StatusCode::OK }, v))
}

#[derive(Deserialize)]
struct UpdateQuery {
    name: String,
    bind: Option<String>,
    unbind: Option<String>,
}

async fn post_update(State(s): State<AppState>, Query(q): Query<UpdateQuery>, text: String) -> Result<(StatusCode, Json<Value>), ApiError> {
    let manifest = if q.bind.is_some() || q.unbind.is_some() { vec![ModuleChange { bind: q.bind, unbind: q.unbind }] } else { Vec::new() };
    let v = ask(&s, |reply| Cmd::Update { text, name: q.name, manifest, reply }).await?;
    Ok((StatusCode::ACCEPTED, v))
}

async fn post_hotswap(State(s): State<AppState>) -> Result<Json<Value>, ApiError> {
    ask(&s, |reply| Cmd::Hotswap { reply }).await
}

#[derive(Deserialize)]
struct ModuleQuery {
    #[serde(default)]
    bind: bool,
}

async fn post_module(State(s): State<AppState>, Query(q): Query<ModuleQuery>, body: String) -> Result<Json<Value>, ApiError> {
    let spec: ModuleSpec = serde_json::from_str(&body).map_err(|e| ApiError::bad(e.to_string()))?;
    ask(&s, |reply| Cmd::Module { spec, bind: q.bind, reply }).await
}

async fn post_command(State(s): State<AppState>, Path(label): Path<String>) -> Result<Json<Value>, ApiError> {
    ask(&s, |reply| Cmd::Command { label, reply }).await
}

async fn get_state(State(s): State<AppState>) -> Result<Json<Value>, ApiError> {
    ask(&s, |reply| Cmd::State { reply }).await
}

async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(ApiError::bad("bad run id"));
    }
    let p = s.runs.join(format!("{id}.json"));
    let text = tokio::fs::read_to_string(&p).await.map_err(|_| ApiError(StatusCode::NOT_FOUND, json!({ "error": "no such run" })))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": e.to_string() })))?;
    Ok(Json(v))
}

async fn stream(State(s): State<AppState>, ws: WebSocketUpgrade) -> Response {
    let rx = s.frames.subscribe();
    ws.on_upgrade(move |socket| pump(socket, rx))
}

async fn pump(mut socket: WebSocket, mut rx: broadcast::Receiver<Frame>) {
    loop {
        match rx.recv().await {
            Ok(f) => {
                let text = serde_json::to_string(&f).expect("frame");
                if socket.send(Message::Text(text.into())).await.is_err() {
                    return;
                }
            }
            Err(broadcast::error::RecvError::Lagged(_)) => continue,
            Err(broadcast::error::RecvError::Closed) => return,
        }
    }
}
