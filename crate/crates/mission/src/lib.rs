//! Mission glue: scenario runner, spec generators, command line and the
//! HTTP/WebSocket service.

pub mod checks;
pub mod generate;
pub mod runner;
pub mod scenario;
pub mod service;

pub use runner::{run_scenario, RunRecord, ScenarioError, SynthMetric, Verdict};
pub use scenario::{Action, Check, Scenario, Step};
