//! GR(1) controller synthesis for LTS environments.
//!
//! [`synthesize`] builds the arena `E x observer`, solves the fixpoint and
//! extracts a controller; [`verify`] re-checks any controller against the
//! problem by exhaustive exploration of the closed loop.

pub mod arena;
mod controller;
mod export;
mod problem;
pub mod solver;
mod verify;

use std::time::{Duration, Instant};

use skyweave_fltl::FltlError;
use skyweave_lts::StateId;

pub use arena::{Arena, Built};
pub use controller::{extract, extract_from, Controller};
pub use export::{parse_table, to_dot, to_table};
pub use problem::ControlProblem;
pub use solver::{solve, Solution};
pub use verify::{verify, verify_watching, ClosedLoop, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("no control problem named {0}")]
    UnknownProblem(String),
    #[error(transparent)]
    Fltl(#[from] FltlError),
    #[error("search space exceeds {0} states")]
    TooLarge(usize),
    #[error("the control problem is unrealizable")]
    Unrealizable,
    #[error("no single command fits every environment state in {0:?}")]
    Unobservable(Vec<StateId>),
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub arena_states: usize,
    pub arena_edges: usize,
    pub outer_iterations: usize,
    pub cpre_calls: usize,
    pub controller_states: usize,
    pub elapsed: Duration,
}

pub struct Synthesis {
    pub realizable: bool,
    pub controller: Option<Controller>,
    pub built: Built,
    pub solution: Solution,
    pub stats: Stats,
}

/// Builds, solves and, when realizable, extracts a controller.
pub fn synthesize(p: &ControlProblem) -> Result<Synthesis, SynthError> {
    let start = Instant::now();
    let built = arena::build(p)?;
    let solution = solve(&built.arena);
    let realizable = solution.is_winning(built.arena.initial());
    let controller = if realizable { Some(extract(&built.arena, &solution)?) } else { None };
    let stats = Stats {
        arena_states: built.arena.num_states(),
        arena_edges: built.arena.num_edges(),
        outer_iterations: solution.outer_iterations,
        cpre_calls: solution.cpre_calls,
        controller_states: controller.as_ref().map_or(0, Controller::num_states),
        elapsed: start.elapsed(),
    };
    Ok(Synthesis { realizable, controller, built, solution, stats })
}
