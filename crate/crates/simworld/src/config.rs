use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Polygon};
use crate::grid::{Grid, GridError};
use crate::modules::ModuleSpec;
use crate::vehicle::VehicleParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("world config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Module(String),
    #[error("bad value: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default)]
    pub origin: Point,
    pub cell_size: f64,
    pub rows: u32,
    pub cols: u32,
    #[serde(default)]
    pub angle: f64,
}

/// An event the world raises at a fixed tick, e.g. a battery alarm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub tick: u64,
    pub event: String,
}

/// World description, read from TOML.
///
/// ```toml
/// dt = 0.1
/// start = 0
/// [grid]
/// cell_size = 10.0
/// rows = 2
/// cols = 3
/// [regions]
/// NoFly = [3, 4, 5]
/// [[modules]]
/// kind = "flight"
/// id = "flight"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub grid: GridConfig,
    /// Regions given by cell ids.
    #[serde(default)]
    pub regions: BTreeMap<String, Vec<u32>>,
    /// Regions given by polygons; a cell belongs if its centre is inside.
    #[serde(default)]
    pub polygons: BTreeMap<String, Vec<Point>>,
    #[serde(default)]
    pub start: u32,
    /// Start hovering instead of parked.
    #[serde(default)]
    pub airborne: bool,
    #[serde(default)]
    pub vehicle: VehicleParams,
    /// Radius of the hover drift applied on arrival, capped at half the
    /// arrival threshold.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub alarms: Vec<Alarm>,
    /// Cells holding a person, for person sensors.
    #[serde(default)]
    pub persons: Vec<u32>,
    #[serde(default)]
    pub modules: Vec<ModuleSpec>,
    /// Modules bound at start; all of them when absent.
    #[serde(default)]
    pub bind: Option<Vec<String>>,
}

fn default_dt() -> f64 {
    0.1
}

impl WorldConfig {
    pub fn parse(text: &str) -> Result<WorldConfig, ConfigError> {
        let c: WorldConfig = toml::from_str(text)?;
        if !(c.dt > 0.0) {
            return Err(ConfigError::Invalid("dt must be positive".into()));
        }
        let mut last = None;
        for a in &c.alarms {
            if last.is_some_and(|t| a.tick <= t) {
                return Err(ConfigError::Invalid("alarm ticks must increase".into()));
            }
            last = Some(a.tick);
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serialisable config")
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        let g = &self.grid;
        let mut grid = Grid::new(g.origin, g.cell_size, g.rows, g.cols, g.angle)?;
        for (name, cells) in &self.regions {
            grid = grid.with_region(name, cells.iter().copied())?;
        }
        for (name, pts) in &self.polygons {
            let poly = Polygon(pts.clone());
            let cells: Vec<u32> = (0..grid.num_cells()).filter(|&i| poly.contains(grid.centre(i))).collect();
            grid = grid.with_region(name, cells)?;
        }
        if self.start >= grid.num_cells() {
            return Err(GridError::BadInitial(self.start).into());
        }
        Ok(grid)
    }
}
