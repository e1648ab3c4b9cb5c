use std::fmt;

use skyweave_fltl::{BoolExpr, Gr1Liveness, SafetyFormula};
use skyweave_lts::Label;

/// Byte range plus 1-based line and column of its start. Spans never take
/// part in structural equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Name {
        Name { text: text.into(), span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRef {
    pub label: Label,
    pub span: Span,
}

impl LabelRef {
    pub fn new(l: &str) -> LabelRef {
        LabelRef { label: Label::from_static(l), span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetExpr {
    Lit(Vec<LabelRef>),
    Ref(Name),
    /// Every event of the document, including the update events.
    Sigma(Span),
    Union(Box<SetExpr>, Box<SetExpr>),
    Diff(Box<SetExpr>, Box<SetExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Local(Name),
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub actions: Vec<LabelRef>,
    pub target: Target,
}

/// One state equation. An empty branch list is `STOP`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDef {
    pub name: Name,
    pub branches: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateRef {
    Name(String),
    Index(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcessBody {
    Equations(Vec<LocalDef>),
    Grid { rows: u32, cols: u32, init: u32, blocked: Vec<u32> },
    Moves { edges: Vec<(u32, u32)>, init: u32 },
    Interrupt { first: Name, second: Name, label: LabelRef, map: Vec<(StateRef, StateRef)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapBlock {
    pub from: Name,
    pub to: Name,
    pub pairs: Vec<(StateRef, StateRef)>,
    /// Shared states deliberately left outside the map's domain.
    pub except: Vec<StateRef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Set { name: Name, value: SetExpr },
    Process { name: Name, body: ProcessBody, extra: Option<SetExpr> },
    Composition { name: Name, parts: Vec<Name> },
    Controllable { set: SetExpr, span: Span },
    Uncontrollable { set: SetExpr, span: Span },
    Fluent { name: Name, initiating: SetExpr, terminating: SetExpr, initial: bool },
    Safety { name: Name, formula: SafetyFormula },
    Liveness { name: Name, formula: Gr1Liveness },
    ControlProblem { name: Name, env: Name, safety: Vec<Name>, liveness: Option<Name> },
    UpdateProblem { name: Name, old: Name, new: Name, maps: Vec<MapBlock>, theta: Vec<Name> },
}

impl Item {
    /// Declared name, if the item declares one.
    pub fn name(&self) -> Option<&Name> {
        match self {
            Item::Set { name, .. }
            | Item::Process { name, .. }
            | Item::Composition { name, .. }
            | Item::Fluent { name, .. }
            | Item::Safety { name, .. }
            | Item::Liveness { name, .. }
            | Item::ControlProblem { name, .. }
            | Item::UpdateProblem { name, .. } => Some(name),
            Item::Controllable { .. } | Item::Uncontrollable { .. } => None,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Item::Controllable { span, .. } | Item::Uncontrollable { span, .. } => *span,
            other => other.name().map(|n| n.span).unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecDocument {
    pub items: Vec<Item>,
}

impl SpecDocument {
    pub fn find(&self, name: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.name().is_some_and(|n| n.text == name))
    }

    pub fn control_problems(&self) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(|i| matches!(i, Item::ControlProblem { .. }))
    }

    pub fn update_problems(&self) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(|i| matches!(i, Item::UpdateProblem { .. }))
    }

    pub fn fluent_names(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|i| match i {
            Item::Fluent { name, .. } => Some(name.text.as_str()),
            _ => None,
        })
    }
}

/// Rewrites atoms: `Fluent(n)` stays a fluent when `is_fluent(n)`, otherwise
/// it becomes the shorthand event fluent for label `n` (and vice versa).
pub fn classify_atoms(e: &BoolExpr, is_fluent: &dyn Fn(&str) -> bool) -> BoolExpr {
    match e {
        BoolExpr::Fluent(n) => {
            if is_fluent(n) || !Label::is_valid(n) {
                BoolExpr::Fluent(n.clone())
            } else {
                BoolExpr::Event(Label::from_static(n))
            }
        }
        BoolExpr::Event(l) => {
            if is_fluent(l.as_str()) {
                BoolExpr::Fluent(l.as_str().to_string())
            } else {
                BoolExpr::Event(l.clone())
            }
        }
        BoolExpr::Const(b) => BoolExpr::Const(*b),
        BoolExpr::Not(x) => BoolExpr::not(classify_atoms(x, is_fluent)),
        BoolExpr::And(v) => BoolExpr::And(v.iter().map(|x| classify_atoms(x, is_fluent)).collect()),
        BoolExpr::Or(v) => BoolExpr::Or(v.iter().map(|x| classify_atoms(x, is_fluent)).collect()),
        BoolExpr::Implies(a, b) => BoolExpr::implies(classify_atoms(a, is_fluent), classify_atoms(b, is_fluent)),
    }
}

pub fn classify_safety(f: &SafetyFormula, is_fluent: &dyn Fn(&str) -> bool) -> SafetyFormula {
    let c = |e: &BoolExpr| classify_atoms(e, is_fluent);
    match f {
        SafetyFormula::Always(b) => SafetyFormula::Always(c(b)),
        SafetyFormula::WeakUntil(h, r) => SafetyFormula::WeakUntil(c(h), c(r)),
        SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release } => {
            SafetyFormula::AlwaysImplWeakUntil { trigger: c(trigger), hold: c(hold), release: c(release) }
        }
        SafetyFormula::Conj(v) => SafetyFormula::Conj(v.iter().map(|x| classify_safety(x, is_fluent)).collect()),
    }
}

pub fn classify_liveness(g: &Gr1Liveness, is_fluent: &dyn Fn(&str) -> bool) -> Gr1Liveness {
    Gr1Liveness {
        assumptions: g.assumptions.iter().map(|e| classify_atoms(e, is_fluent)).collect(),
        guarantees: g.guarantees.iter().map(|e| classify_atoms(e, is_fluent)).collect(),
    }
}
