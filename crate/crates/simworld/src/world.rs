use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use skyweave_lts::Label;

use crate::config::{Alarm, ConfigError, WorldConfig};
use crate::geom::Point;
use crate::grid::Grid;
use crate::modules::{Ctx, DispatchError, HybridModule, ModuleSpec};
use crate::vehicle::{vehicle_tick, VehicleParams, VehicleState};

/// Snapshot published once per tick.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Telemetry {
    pub tick: u64,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub alt: f64,
    pub speed: f64,
    pub flying: bool,
    pub battery: f64,
    pub cell: Option<u32>,
    pub target: Option<u32>,
}

/// An arrival, for coverage checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub tick: u64,
    pub cell: u32,
}

/// The simulated world: grid, vehicle and hybrid modules, advanced on a
/// fixed-step clock.
pub struct World {
    pub grid: Grid,
    pub params: VehicleParams,
    pub vehicle: VehicleState,
    pub dt: f64,
    modules: BTreeMap<String, Box<dyn HybridModule>>,
    bound: BTreeSet<String>,
    cursor: Option<u32>,
    to_cursor: bool,
    rng: ChaCha8Rng,
    jitter: f64,
    tick: u64,
    alarms: Vec<Alarm>,
    persons: BTreeSet<u32>,
    visits: Vec<Visit>,
}

impl World {
    pub fn from_config(cfg: &WorldConfig) -> Result<World, ConfigError> {
        let grid = cfg.build_grid()?;
        let mut vehicle = VehicleState::parked(grid.centre(cfg.start));
        if cfg.airborne {
            vehicle.flying = true;
            vehicle.alt = 10.0;
        }
        let mut w = World {
            jitter: cfg.jitter.clamp(0.0, grid.arrival_threshold() / 2.0),
            grid,
            params: cfg.vehicle.clone(),
            vehicle,
            dt: cfg.dt,
            modules: BTreeMap::new(),
            bound: BTreeSet::new(),
            cursor: None,
            to_cursor: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            tick: 0,
            alarms: cfg.alarms.clone(),
            persons: cfg.persons.iter().copied().collect(),
            visits: Vec::new(),
        };
        for m in &cfg.modules {
            w.upload(m)?;
        }
        let ids: Vec<String> = match &cfg.bind {
            Some(b) => b.clone(),
            None => cfg.modules.iter().map(|m| m.id().to_string()).collect(),
        };
        for id in ids {
            w.bind(&id).map_err(|e| ConfigError::Module(e.to_string()))?;
        }
        Ok(w)
    }

    /// Adds or replaces a module. A replaced module is unbound.
    pub fn upload(&mut self, spec: &ModuleSpec) -> Result<(), ConfigError> {
        let m = spec.build(&self.grid, &self.persons).map_err(ConfigError::Module)?;
        self.bound.remove(spec.id());
        self.modules.insert(spec.id().to_string(), m);
        Ok(())
    }

    /// Binds a module whose commands and events no bound module shares.
    pub fn bind(&mut self, id: &str) -> Result<(), DispatchError> {
        let m = self.modules.get(id).ok_or_else(|| DispatchError::UnknownModule(id.to_string()))?;
        let mine: BTreeSet<Label> = m.commands().union(&m.events()).cloned().collect();
        for other in self.bound.iter().filter(|b| *b != id) {
            let o = &self.modules[other];
            if let Some(l) = o.commands().union(&o.events()).find(|l| mine.contains(*l)) {
                return Err(DispatchError::AmbiguousHandler(l.clone()));
            }
        }
        self.bound.insert(id.to_string());
        Ok(())
    }

    pub fn unbind(&mut self, id: &str) {
        self.bound.remove(id);
    }

    pub fn bound(&self) -> &BTreeSet<String> {
        &self.bound
    }

    /// Commands of every uploaded module, by id.
    pub fn declarations(&self) -> Vec<(String, BTreeSet<Label>)> {
        self.modules.iter().map(|(id, m)| (id.clone(), m.commands())).collect()
    }

    fn handler(&self, cmd: &Label) -> Result<String, DispatchError> {
        let mut hs = self.bound.iter().filter(|id| self.modules[*id].commands().contains(cmd));
        let h = hs.next().ok_or_else(|| DispatchError::UnhandledCommand(cmd.clone()))?;
        if hs.next().is_some() {
            return Err(DispatchError::AmbiguousHandler(cmd.clone()));
        }
        Ok(h.clone())
    }

    /// Hands `cmd` to the one bound module that accepts it.
    pub fn dispatch(&mut self, cmd: &Label) -> Result<Vec<Label>, DispatchError> {
        let id = self.handler(cmd)?;
        let m = self.modules.get_mut(&id).expect("bound module exists");
        let mut ctx = Ctx { vehicle: &mut self.vehicle, grid: &self.grid, cursor: &mut self.cursor, to_cursor: &mut self.to_cursor };
        m.command(cmd, &mut ctx)
    }

    /// Advances one tick and returns the events raised.
    pub fn step(&mut self) -> Vec<Label> {
        self.tick += 1;
        let mut out = Vec::new();
        while self.alarms.first().is_some_and(|a| a.tick <= self.tick) {
            let a = self.alarms.remove(0);
            if let Ok(l) = Label::new(&a.event) {
                out.push(l);
            }
        }
        for id in &self.bound {
            let m = self.modules.get_mut(id).expect("bound module exists");
            let mut ctx = Ctx { vehicle: &mut self.vehicle, grid: &self.grid, cursor: &mut self.cursor, to_cursor: &mut self.to_cursor };
            out.extend(m.tick(self.dt, &mut ctx));
        }
        let (mut v, arrived, events) = vehicle_tick(&self.vehicle, self.dt, &self.grid, &self.params);
        for e in events {
            match arrived {
                Some(c) if e.as_str().starts_with("at.") => {
                    if self.jitter > 0.0 {
                        let r = self.rng.random_range(0.0..self.jitter);
                        let a = self.rng.random_range(0.0..std::f64::consts::TAU);
                        v.pos = Point::new(v.pos.x + r * a.cos(), v.pos.y + r * a.sin());
                    }
                    assert_eq!(self.grid.cell_of(v.pos), Some(c), "arrival outside the cell");
                    self.visits.push(Visit { tick: self.tick, cell: c });
                    if std::mem::take(&mut self.to_cursor) {
                        out.push(Label::from_static("arrived.next"));
                    } else {
                        out.push(e);
                    }
                }
                _ => out.push(e),
            }
        }
        self.vehicle = v;
        out
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    pub fn cursor(&self) -> Option<u32> {
        self.cursor
    }

    pub fn telemetry(&self) -> Telemetry {
        let v = &self.vehicle;
        Telemetry {
            tick: self.tick,
            time: self.tick as f64 * self.dt,
            x: v.pos.x,
            y: v.pos.y,
            alt: v.alt,
            speed: v.speed,
            flying: v.flying,
            battery: v.battery,
            cell: self.grid.cell_of(v.pos),
            target: v.target,
        }
    }
}
