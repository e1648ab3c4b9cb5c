//! Runs a discrete controller against a stream of events.
//!
//! Each [`Enactor::tick`] takes in every queued message, feeds the queued
//! events to the controller, applies a pending hot-swap and then emits at most
//! one command. Events that the controller does not expect hand control to a
//! preset [`FallbackPlan`].

mod enactable;
mod fallback;
pub mod log;
mod modules;

use std::collections::VecDeque;
use std::sync::mpsc::{channel, Receiver, Sender};

use skyweave_dcu::UpdateSolution;
use skyweave_lang::{RECONFIG, START_NEW, STOP_OLD};
use skyweave_lts::{Label, StateId, StateMap};

pub use enactable::Enactable;
pub use fallback::FallbackPlan;
pub use log::{Dir, Record};
pub use modules::{ModuleChange, ModuleDecl, Modules};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnactError {
    #[error("no entry of the state map for controller state {0}")]
    StaleSolution(StateId),
    #[error("a swap is already pending")]
    Busy,
    #[error("module {0} was never uploaded")]
    UnknownModule(String),
    #[error("several bound modules accept {0}")]
    AmbiguousHandler(Label),
    #[error("no bound module accepts {0}")]
    UnhandledCommand(Label),
    #[error("swaps are only taken while running")]
    NotRunning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Running,
    Fallback,
    Landed,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Running => "running",
            Mode::Fallback => "fallback",
            Mode::Landed => "landed",
        }
    }
}

/// A replacement controller, where to resume in it, and the modules to swap
/// when it issues `reconfig`.
#[derive(Clone, Debug)]
pub struct Swap {
    pub controller: Enactable,
    pub f: StateMap,
    pub manifest: Vec<ModuleChange>,
}

impl Swap {
    pub fn from_update(sol: &UpdateSolution, manifest: Vec<ModuleChange>) -> Swap {
        Swap { controller: Enactable::from_update(sol), f: sol.f.clone(), manifest }
    }
}

pub enum Msg {
    Event(Label),
    Swap(Box<Swap>),
}

/// Sending side of the enactor's queue; cheap to clone across threads.
#[derive(Clone)]
pub struct Handle(Sender<Msg>);

impl Handle {
    /// Returns false once the enactor is gone.
    pub fn push(&self, ev: Label) -> bool {
        self.0.send(Msg::Event(ev)).is_ok()
    }

    pub fn request_swap(&self, s: Swap) -> bool {
        self.0.send(Msg::Swap(Box::new(s))).is_ok()
    }
}

pub struct Enactor {
    controller: Enactable,
    state: StateId,
    /// Bumped on every swap.
    version: u32,
    inbox: VecDeque<Label>,
    rx: Receiver<Msg>,
    tx: Sender<Msg>,
    pending_swap: Option<Box<Swap>>,
    manifest: Vec<ModuleChange>,
    pub modules: Modules,
    mode: Mode,
    fallback: FallbackPlan,
    log: Vec<Record>,
    tick: u64,
}

fn is_update_event(l: &Label) -> bool {
    [STOP_OLD, START_NEW, RECONFIG].contains(&l.as_str())
}

impl Enactor {
    pub fn new(controller: Enactable, fallback: FallbackPlan) -> Enactor {
        let (tx, rx) = channel();
        Enactor {
            state: controller.initial(),
            controller,
            version: 0,
            inbox: VecDeque::new(),
            rx,
            tx,
            pending_swap: None,
            manifest: Vec::new(),
            modules: Modules::default(),
            mode: Mode::Running,
            fallback,
            log: Vec::new(),
            tick: 0,
        }
    }

    pub fn handle(&self) -> Handle {
        Handle(self.tx.clone())
    }

    pub fn push(&self, ev: Label) {
        self.tx.send(Msg::Event(ev)).expect("own receiver is alive");
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn controller(&self) -> &Enactable {
        &self.controller
    }

    pub fn log(&self) -> &[Record] {
        &self.log
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn has_pending_swap(&self) -> bool {
        self.pending_swap.is_some()
    }

    /// Command the controller would issue next.
    pub fn selection(&self) -> Option<&Label> {
        if self.mode == Mode::Landed {
            return None;
        }
        self.controller.selection(self.state)
    }

    fn record(&mut self, dir: Dir, label: &str, before: StateId, after: StateId) {
        self.log.push(Record { tick: self.tick, dir, label: label.to_string(), before, after });
    }

    /// Moves queued messages into the inbox; a second swap while one is
    /// pending is dropped.
    fn intake(&mut self) {
        while let Ok(m) = self.rx.try_recv() {
            match m {
                Msg::Event(e) => self.inbox.push_back(e),
                Msg::Swap(s) => {
                    if self.pending_swap.is_some() {
                        self.record(Dir::Rejected, "busy", self.state, self.state);
                    } else {
                        self.pending_swap = Some(s);
                    }
                }
            }
        }
    }

    /// Feeds every queued event to the controller.
    pub fn drain(&mut self) {
        self.intake();
        while let Some(ev) = self.inbox.pop_front() {
            self.consume(ev);
        }
    }

    fn consume(&mut self, ev: Label) {
        let before = self.state;
        if self.mode == Mode::Landed || !self.controller.lts.has_label(ev.as_str()) {
            self.record(Dir::Absorbed, ev.as_str(), before, before);
            return;
        }
        match self.controller.next(before, &ev) {
            Some(t) => {
                self.state = t;
                self.record(Dir::In, ev.as_str(), before, t);
                self.check_landed();
            }
            None if self.mode == Mode::Fallback => self.record(Dir::Absorbed, ev.as_str(), before, before),
            None => self.on_unexpected(&ev),
        }
    }

    /// Engages the fallback plan.
    pub fn on_unexpected(&mut self, ev: &Label) {
        if self.mode != Mode::Running {
            self.record(Dir::Absorbed, ev.as_str(), self.state, self.state);
            return;
        }
        let before = self.state;
        self.mode = Mode::Fallback;
        self.controller = self.fallback.controller.clone();
        self.state = self.controller.initial();
        self.pending_swap = None;
        self.record(Dir::Fallback, ev.as_str(), before, self.state);
    }

    fn check_landed(&mut self) {
        if self.mode == Mode::Fallback && self.fallback.is_landed(self.state) {
            self.mode = Mode::Landed;
            self.record(Dir::Landed, "-", self.state, self.state);
        }
    }

    /// Replaces the controller now, resuming at `f(state)`.
    pub fn hotswap(&mut self, s: Swap) -> Result<(), EnactError> {
        if self.mode != Mode::Running {
            return Err(EnactError::NotRunning);
        }
        let t = s.f.get_single(self.state).ok_or(EnactError::StaleSolution(self.state))?;
        let before = self.state;
        self.controller = s.controller;
        self.manifest = s.manifest;
        self.state = t;
        self.version += 1;
        self.record(Dir::Swap, "hotSwap", before, t);
        Ok(())
    }

    /// Queues a swap for the next tick.
    pub fn request_swap(&mut self, s: Swap) -> Result<(), EnactError> {
        self.intake();
        if self.pending_swap.is_some() {
            return Err(EnactError::Busy);
        }
        self.pending_swap = Some(Box::new(s));
        Ok(())
    }

    /// One step: drain, swap if requested, then emit at most one command.
    pub fn tick(&mut self) -> Vec<Label> {
        self.tick += 1;
        self.drain();
        if let Some(s) = self.pending_swap.take() {
            if let Err(e) = self.hotswap(*s) {
                let why = match e {
                    EnactError::StaleSolution(_) => "stale",
                    _ => "not-running",
                };
                self.record(Dir::Rejected, why, self.state, self.state);
            }
        }
        self.emit().into_iter().collect()
    }

    fn emit(&mut self) -> Option<Label> {
        let cmd = self.selection()?.clone();
        let mut applied = false;
        if self.mode == Mode::Running {
            if cmd.as_str() == RECONFIG {
                let manifest = std::mem::take(&mut self.manifest);
                if self.modules.apply(&manifest).is_err() {
                    self.on_unexpected(&cmd);
                    return None;
                }
                applied = !manifest.is_empty();
            } else if !is_update_event(&cmd) && !self.modules.is_empty() && self.modules.handler(&cmd).is_none() {
                self.on_unexpected(&cmd);
                return None;
            }
        }
        let before = self.state;
        let t = self.controller.next(before, &cmd).expect("selection is enabled");
        self.state = t;
        self.record(Dir::Out, cmd.as_str(), before, t);
        if applied {
            let bound: Vec<&str> = self.modules.bound().iter().map(String::as_str).collect();
            let b = if bound.is_empty() { "-".to_string() } else { bound.join(",") };
            self.record(Dir::Modules, &b, t, t);
        }
        self.check_landed();
        Some(cmd)
    }

    /// Ticks until no command is issued and the inbox is empty, at most
    /// `limit` times. Returns every command issued.
    pub fn run_quiet(&mut self, limit: usize) -> Vec<Label> {
        let mut out = Vec::new();
        for _ in 0..limit {
            let c = self.tick();
            if c.is_empty() {
                break;
            }
            out.extend(c);
        }
        out
    }
}
