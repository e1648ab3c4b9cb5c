//! The `.fsl` specification language.
//!
//! ```text
//! Move = grid(2, 3, 0).
//! Cap = (takeOff -> takeOff.end -> Fly), Fly = ({go[i:0..5]} -> Arrive), Arrive = ({at[i:0..5]} -> Fly).
//! ||Env = (Move || Cap).
//! controllable = {takeOff, go[i:0..5]}.
//! fluent At0 = <{at.0}, {at[i:1..5]}, init true>.
//! assert safety NoFly = [](!at.3 && !at.4 && !at.5).
//! liveness Patrol = gr1( |- []<>(At0), []<>(at.2)).
//! problem control P { env = Env; safety = NoFly; liveness = Patrol; }
//! ```

pub mod ast;
mod emit;
mod lexer;
mod parser;
mod resolve;

use std::fmt;

use skyweave_fltl::FluentDef;
use skyweave_lts::Label;

pub use ast::{Item, Span, SpecDocument};
pub use emit::emit;
pub use parser::parse;
pub use resolve::{resolve, validate, validate_with, ComponentMap, Context, ControlDecl, Model, UpdateDecl};

pub const HOT_SWAP: &str = "hotSwap";
pub const STOP_OLD: &str = "stopOld";
pub const START_NEW: &str = "startNew";
pub const RECONFIG: &str = "reconfig";
pub const UPDATE_EVENTS: [&str; 4] = [HOT_SWAP, STOP_OLD, START_NEW, RECONFIG];

/// Latching fluents over the update events, available in every document.
pub fn library_fluents() -> Vec<FluentDef> {
    [("HotSwap", HOT_SWAP), ("OldStopped", STOP_OLD), ("NewStarted", START_NEW), ("Reconfigured", RECONFIG)]
        .into_iter()
        .map(|(n, e)| FluentDef::latch(n, Label::from_static(e)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    Fragment,
    UnresolvedName,
    Duplicate,
    PartitionOverlap,
    PartialMap,
    AlphabetMismatch,
    NameClash,
    Overlap,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn new(kind: DiagKind, message: impl Into<String>, span: Span) -> Diagnostic {
        Diagnostic { kind, message: message.into(), span }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.span, self.kind, self.message)
    }
}

/// Parses and resolves in one go.
pub fn load(src: &str, ctx: &Context) -> Result<(SpecDocument, Model), Vec<Diagnostic>> {
    let doc = parse(src).map_err(|d| vec![d])?;
    let model = resolve(&doc, ctx)?;
    Ok((doc, model))
}
