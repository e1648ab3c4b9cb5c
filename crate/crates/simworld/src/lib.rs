//! A grid world with one simulated vehicle and the hybrid modules that
//! translate discrete commands into motion and sensing.

pub mod config;
pub mod geom;
pub mod grid;
pub mod modules;
pub mod vehicle;
mod world;

pub use config::{Alarm, ConfigError, GridConfig, WorldConfig};
pub use geom::{Point, Polygon, Rect};
pub use grid::{discretize, Discretization, Grid, GridError};
pub use modules::{DispatchError, HybridModule, IteratorState, ModuleSpec, Phase};
pub use vehicle::{vehicle_tick, VehicleParams, VehicleState};
pub use world::{Telemetry, Visit, World};
