//! Fluent linear temporal logic: fluents, the safety fragment used for
//! specifications, GR(1) liveness, and observers that turn safety formulas
//! into deterministic monitors.

mod fluent;
mod formula;
mod monitor;
pub mod observer;

pub use fluent::{advance, initial_valuation, FluentDef, Valuation};
pub use formula::{BoolExpr, Gr1Liveness, SafetyFormula};
pub use monitor::{check_trace, compile_safety, materialise, Monitor, TraceVerdict};
pub use observer::{Guard, ObsState, Observer, ObserverBuilder};

use skyweave_lts::Label;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FltlError {
    #[error("fluent {0} is defined twice")]
    DuplicateFluentName(String),
    #[error("fluent {fluent}: event {label} both initiates and terminates it")]
    OverlappingSets { fluent: String, label: Label },
    #[error("unknown fluent {0}")]
    UnknownFluent(String),
    #[error("formula outside the supported fragment: {0}")]
    UnsupportedFragment(String),
}
