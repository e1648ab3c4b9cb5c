//! Hybrid modules: each turns discrete commands into effects on the vehicle
//! and answers with discrete events.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use skyweave_lts::Label;

use crate::grid::Grid;
use crate::vehicle::VehicleState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DispatchError {
    #[error("no bound module handles {0}")]
    UnhandledCommand(Label),
    #[error("more than one bound module claims {0}")]
    AmbiguousHandler(Label),
    #[error("unknown module {0}")]
    UnknownModule(String),
    #[error("module {module} cannot take {cmd} now: {reason}")]
    Protocol { module: String, cmd: Label, reason: &'static str },
}

/// What a module may touch during a command or a tick.
pub struct Ctx<'a> {
    pub vehicle: &'a mut VehicleState,
    pub grid: &'a Grid,
    /// Cell under the iterator cursor.
    pub cursor: &'a mut Option<u32>,
    /// The current flight reports `arrived.next` rather than `at.i`.
    pub to_cursor: &'a mut bool,
}

pub trait HybridModule: Send {
    fn id(&self) -> &str;
    fn commands(&self) -> BTreeSet<Label>;
    fn events(&self) -> BTreeSet<Label>;
    /// Runs `cmd`; returns the events it produces straight away.
    fn command(&mut self, cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError>;
    /// Timed behaviour.
    fn tick(&mut self, _dt: f64, _ctx: &mut Ctx) -> Vec<Label> {
        Vec::new()
    }
}

fn l(s: &str) -> Label {
    Label::new(s).expect("module label")
}

fn labels<'a>(xs: impl IntoIterator<Item = &'a str>) -> BTreeSet<Label> {
    xs.into_iter().map(l).collect()
}

/// Declarative description of a module, as found in world configs and
/// upload requests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModuleSpec {
    Flight {
        id: String,
        #[serde(default = "one")]
        takeoff: f64,
        #[serde(default = "one")]
        land: f64,
        #[serde(default = "cruise")]
        cruise: f64,
    },
    Packages { id: String, packages: Vec<u32> },
    Iterator {
        id: String,
        /// Cells to iterate; the whole grid when absent.
        #[serde(default)]
        cells: Option<Vec<u32>>,
    },
    Sensor { id: String, region: String },
    Spin {
        id: String,
        #[serde(default = "one")]
        secs: f64,
    },
    Person { id: String },
    Height {
        id: String,
        #[serde(default = "low")]
        low: f64,
        #[serde(default = "cruise")]
        high: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn cruise() -> f64 {
    10.0
}
fn low() -> f64 {
    3.0
}

impl ModuleSpec {
    pub fn id(&self) -> &str {
        match self {
            ModuleSpec::Flight { id, .. }
            | ModuleSpec::Packages { id, .. }
            | ModuleSpec::Iterator { id, .. }
            | ModuleSpec::Sensor { id, .. }
            | ModuleSpec::Spin { id, .. }
            | ModuleSpec::Person { id }
            | ModuleSpec::Height { id, .. } => id,
        }
    }

    /// `persons` is the scripted placement table used by person sensors.
    pub fn build(&self, grid: &Grid, persons: &BTreeSet<u32>) -> Result<Box<dyn HybridModule>, String> {
        Ok(match self {
            ModuleSpec::Flight { id, takeoff, land, cruise } => Box::new(Flight::new(id, grid.num_cells(), *takeoff, *land, *cruise)),
            ModuleSpec::Packages { id, packages } => Box::new(Packages::new(id, packages)),
            ModuleSpec::Iterator { id, cells } => {
                let cells = cells.clone().unwrap_or_else(|| (0..grid.num_cells()).collect());
                if let Some(c) = cells.iter().find(|&&c| c >= grid.num_cells()) {
                    return Err(format!("iterator {id} names cell {c}, which is not on the grid"));
                }
                Box::new(IteratorModule::new(id, cells))
            }
            ModuleSpec::Sensor { id, region } => {
                let cells = grid.region(region).ok_or_else(|| format!("sensor {id}: unknown region {region}"))?;
                Box::new(RegionSensor::new(id, region, cells.clone()))
            }
            ModuleSpec::Spin { id, secs } => Box::new(Spin { id: id.clone(), secs: *secs, left: None }),
            ModuleSpec::Person { id } => Box::new(PersonSensor { id: id.clone(), placements: persons.clone() }),
            ModuleSpec::Height { id, low, high } => Box::new(Height { id: id.clone(), low: *low, high: *high }),
        })
    }
}

/// A timer that fires one event.
#[derive(Clone, Debug)]
struct Pending {
    left: f64,
    event: Label,
}

fn run_timer(p: &mut Option<Pending>, dt: f64) -> Option<Label> {
    let t = p.as_mut()?;
    t.left -= dt;
    if t.left <= 1e-9 {
        return p.take().map(|t| t.event);
    }
    None
}

/// `takeOff`, `land`, `go.i` and `go.next`.
pub struct Flight {
    id: String,
    cells: u32,
    takeoff: f64,
    land: f64,
    cruise: f64,
    pending: Option<Pending>,
    landing: bool,
}

impl Flight {
    pub fn new(id: &str, cells: u32, takeoff: f64, land: f64, cruise: f64) -> Flight {
        Flight { id: id.to_string(), cells, takeoff, land, cruise, pending: None, landing: false }
    }

    fn refuse(&self, cmd: &Label, reason: &'static str) -> DispatchError {
        DispatchError::Protocol { module: self.id.clone(), cmd: cmd.clone(), reason }
    }
}

impl HybridModule for Flight {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        let mut s = labels(["takeOff", "land", "go.next"]);
        s.extend((0..self.cells).map(|i| l(&format!("go.{i}"))));
        s
    }

    fn events(&self) -> BTreeSet<Label> {
        let mut s = labels(["takeOff.end", "land.end", "arrived.next"]);
        s.extend((0..self.cells).map(|i| l(&format!("at.{i}"))));
        s
    }

    fn command(&mut self, cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        match cmd.as_str() {
            "takeOff" => {
                if ctx.vehicle.flying {
                    return Err(self.refuse(cmd, "already flying"));
                }
                ctx.vehicle.flying = true;
                ctx.vehicle.alt = self.cruise;
                self.pending = Some(Pending { left: self.takeoff, event: l("takeOff.end") });
            }
            "land" => {
                if !ctx.vehicle.flying {
                    return Err(self.refuse(cmd, "on the ground"));
                }
                ctx.vehicle.target = None;
                *ctx.to_cursor = false;
                self.landing = true;
                self.pending = Some(Pending { left: self.land, event: l("land.end") });
            }
            "go.next" => {
                let c = ctx.cursor.ok_or_else(|| self.refuse(cmd, "iterator has no cursor"))?;
                if !ctx.vehicle.flying {
                    return Err(self.refuse(cmd, "on the ground"));
                }
                ctx.vehicle.target = Some(c);
                *ctx.to_cursor = true;
            }
            go => {
                let c: u32 = go.strip_prefix("go.").and_then(|n| n.parse().ok()).filter(|&c| c < self.cells).ok_or_else(|| DispatchError::UnhandledCommand(cmd.clone()))?;
                if !ctx.vehicle.flying {
                    return Err(self.refuse(cmd, "on the ground"));
                }
                ctx.vehicle.target = Some(c);
                *ctx.to_cursor = false;
            }
        }
        Ok(Vec::new())
    }

    fn tick(&mut self, dt: f64, ctx: &mut Ctx) -> Vec<Label> {
        let Some(ev) = run_timer(&mut self.pending, dt) else { return Vec::new() };
        if self.landing {
            self.landing = false;
            ctx.vehicle.flying = false;
            ctx.vehicle.alt = 0.0;
            ctx.vehicle.speed = 0.0;
        }
        vec![ev]
    }
}

/// Package handling: `grab.i` and `release.i` strictly alternate.
pub struct Packages {
    id: String,
    held: BTreeMap<u32, bool>,
}

impl Packages {
    pub fn new(id: &str, packages: &[u32]) -> Packages {
        Packages { id: id.to_string(), held: packages.iter().map(|&p| (p, false)).collect() }
    }

    pub fn holding(&self, p: u32) -> bool {
        self.held.get(&p).copied().unwrap_or(false)
    }
}

impl HybridModule for Packages {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        self.held.keys().flat_map(|p| [l(&format!("grab.{p}")), l(&format!("release.{p}"))]).collect()
    }

    fn events(&self) -> BTreeSet<Label> {
        BTreeSet::new()
    }

    fn command(&mut self, cmd: &Label, _ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        let (verb, p) = cmd.as_str().split_once('.').ok_or_else(|| DispatchError::UnhandledCommand(cmd.clone()))?;
        let p: u32 = p.parse().map_err(|_| DispatchError::UnhandledCommand(cmd.clone()))?;
        let held = self.held.get_mut(&p).ok_or_else(|| DispatchError::UnhandledCommand(cmd.clone()))?;
        let want = verb == "grab";
        if *held == want {
            let reason = if want { "already holding" } else { "not holding" };
            return Err(DispatchError::Protocol { module: self.id.clone(), cmd: cmd.clone(), reason });
        }
        *held = want;
        Ok(Vec::new())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// Ready for `has.next?` or `reset`.
    Idle,
    /// `y.next` given; waiting for `remove.next`.
    Cursor,
    /// `n.next` given; waiting for `reset`.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IteratorState {
    pub remaining: Vec<u32>,
    pub cursor: Option<u32>,
    pub phase: Phase,
}

/// Row-major iteration over a set of cells.
pub struct IteratorModule {
    id: String,
    all: Vec<u32>,
    pub state: IteratorState,
}

impl IteratorModule {
    pub fn new(id: &str, mut cells: Vec<u32>) -> IteratorModule {
        cells.sort_unstable();
        cells.dedup();
        let state = IteratorState { remaining: cells.clone(), cursor: None, phase: Phase::Idle };
        IteratorModule { id: id.to_string(), all: cells, state }
    }
}

impl HybridModule for IteratorModule {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        labels(["has.next?", "remove.next", "reset"])
    }

    fn events(&self) -> BTreeSet<Label> {
        labels(["y.next", "n.next"])
    }

    fn command(&mut self, cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        let refuse = |reason| DispatchError::Protocol { module: self.id.clone(), cmd: cmd.clone(), reason };
        let s = &mut self.state;
        let out = match (cmd.as_str(), s.phase) {
            ("has.next?", Phase::Idle) => match s.remaining.first() {
                Some(&c) => {
                    s.cursor = Some(c);
                    s.phase = Phase::Cursor;
                    vec![l("y.next")]
                }
                None => {
                    s.phase = Phase::Exhausted;
                    vec![l("n.next")]
                }
            },
            ("remove.next", Phase::Cursor) => {
                s.remaining.remove(0);
                s.cursor = None;
                s.phase = Phase::Idle;
                Vec::new()
            }
            ("reset", Phase::Idle | Phase::Exhausted) => {
                s.remaining = self.all.clone();
                s.cursor = None;
                s.phase = Phase::Idle;
                Vec::new()
            }
            ("has.next?" | "remove.next" | "reset", _) => return Err(refuse("out of order")),
            _ => return Err(DispatchError::UnhandledCommand(cmd.clone())),
        };
        *ctx.cursor = s.cursor;
        Ok(out)
    }
}

/// Answers `is.next.inX?` by membership of the cursor cell in region X.
pub struct RegionSensor {
    id: String,
    region: String,
    cells: BTreeSet<u32>,
}

impl RegionSensor {
    pub fn new(id: &str, region: &str, cells: BTreeSet<u32>) -> RegionSensor {
        RegionSensor { id: id.to_string(), region: region.to_string(), cells }
    }
}

impl HybridModule for RegionSensor {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        BTreeSet::from([l(&format!("is.next.in{}?", self.region))])
    }

    fn events(&self) -> BTreeSet<Label> {
        BTreeSet::from([l(&format!("yes.next.in{}", self.region)), l(&format!("no.next.in{}", self.region))])
    }

    fn command(&mut self, cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        if !self.commands().contains(cmd) {
            return Err(DispatchError::UnhandledCommand(cmd.clone()));
        }
        let c = ctx.cursor.ok_or_else(|| DispatchError::Protocol { module: self.id.clone(), cmd: cmd.clone(), reason: "iterator has no cursor" })?;
        let ans = if self.cells.contains(&c) { "yes" } else { "no" };
        Ok(vec![l(&format!("{ans}.next.in{}", self.region))])
    }
}

/// `do.spin`, then `spin.ended` after a fixed time.
pub struct Spin {
    id: String,
    secs: f64,
    left: Option<Pending>,
}

impl HybridModule for Spin {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        labels(["do.spin"])
    }

    fn events(&self) -> BTreeSet<Label> {
        labels(["spin.ended"])
    }

    fn command(&mut self, cmd: &Label, _ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        if self.left.is_some() {
            return Err(DispatchError::Protocol { module: self.id.clone(), cmd: cmd.clone(), reason: "already spinning" });
        }
        self.left = Some(Pending { left: self.secs, event: l("spin.ended") });
        Ok(Vec::new())
    }

    fn tick(&mut self, dt: f64, _ctx: &mut Ctx) -> Vec<Label> {
        run_timer(&mut self.left, dt).into_iter().collect()
    }
}

/// Stub person detector backed by a placement table.
pub struct PersonSensor {
    id: String,
    placements: BTreeSet<u32>,
}

impl HybridModule for PersonSensor {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        labels(["sense.person"])
    }

    fn events(&self) -> BTreeSet<Label> {
        labels(["found", "not.found"])
    }

    fn command(&mut self, _cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        let here = ctx.grid.cell_of(ctx.vehicle.pos);
        let hit = here.is_some_and(|c| self.placements.contains(&c));
        Ok(vec![l(if hit { "found" } else { "not.found" })])
    }
}

/// `low.height` and `high.height`. Altitude is telemetry only.
pub struct Height {
    id: String,
    low: f64,
    high: f64,
}

impl HybridModule for Height {
    fn id(&self) -> &str {
        &self.id
    }

    fn commands(&self) -> BTreeSet<Label> {
        labels(["low.height", "high.height"])
    }

    fn events(&self) -> BTreeSet<Label> {
        BTreeSet::new()
    }

    fn command(&mut self, cmd: &Label, ctx: &mut Ctx) -> Result<Vec<Label>, DispatchError> {
        ctx.vehicle.alt = if cmd.as_str() == "low.height" { self.low } else { self.high };
        Ok(Vec::new())
    }
}
