//! Finite labelled transition systems.
//!
//! Environments, monitors and controllers are all [`Lts`] values. The
//! operations here are pure: parallel composition (reachable part only),
//! the interrupt operator with set-valued state maps, reachability pruning
//! and single-event stepping.

pub mod grid;
mod label;
mod lts;
mod ops;

pub use label::{Alphabet, Label};
pub use lts::{Lts, StateId, StateMap};
pub use ops::{compose, compose_all, compose_all_from, interrupt, interrupt_partial};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtsError {
    #[error("invalid event label {0:?}")]
    InvalidLabel(String),
    #[error("label {0} is not in the alphabet")]
    LabelNotInAlphabet(Label),
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("state map has no entry for state {0}")]
    PartialMap(StateId),
    #[error("interrupt label {0} already occurs in an operand alphabet")]
    LabelClash(Label),
    #[error("event {0} is both controlled and uncontrolled")]
    PartitionOverlap(Label),
}
