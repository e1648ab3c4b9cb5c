//! Name resolution and validation: turns a parsed document into concrete
//! LTSs, fluent definitions and formulas.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use skyweave_fltl::{BoolExpr, FluentDef, Gr1Liveness, SafetyFormula};
use skyweave_lts::grid::{grid_adjacency, movement_lts};
use skyweave_lts::{compose_all, interrupt, Alphabet, Label, Lts, LtsError, StateId, StateMap};

use crate::ast::*;
use crate::{library_fluents, DiagKind, Diagnostic, HOT_SWAP, UPDATE_EVENTS};

/// Pieces supplied from outside the document, e.g. by the discretizer.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub processes: BTreeMap<String, Lts>,
    pub fluents: Vec<FluentDef>,
    pub sets: BTreeMap<String, BTreeSet<Label>>,
    pub controllable: BTreeSet<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlDecl {
    pub name: String,
    pub env: String,
    pub safety: Vec<String>,
    pub liveness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentMap {
    pub from: String,
    pub to: String,
    pub map: StateMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateDecl {
    pub name: String,
    pub old: String,
    pub new: String,
    pub maps: Vec<ComponentMap>,
    pub theta: Vec<String>,
}

/// A fully resolved document.
#[derive(Clone, Debug)]
pub struct Model {
    pub processes: BTreeMap<String, Lts>,
    /// Direct parts of each composition; a plain process is its own part.
    pub components: BTreeMap<String, Vec<String>>,
    pub fluents: Vec<FluentDef>,
    pub safety: BTreeMap<String, SafetyFormula>,
    pub liveness: BTreeMap<String, Gr1Liveness>,
    pub sigma: BTreeSet<Label>,
    pub alphabet: Alphabet,
    pub control: Vec<ControlDecl>,
    pub updates: Vec<UpdateDecl>,
}

impl Model {
    pub fn control_problem(&self, name: &str) -> Option<&ControlDecl> {
        self.control.iter().find(|c| c.name == name)
    }

    pub fn update_problem(&self, name: &str) -> Option<&UpdateDecl> {
        self.updates.iter().find(|c| c.name == name)
    }

    pub fn safety_of(&self, names: &[String]) -> SafetyFormula {
        SafetyFormula::and(names.iter().filter_map(|n| self.safety.get(n).cloned()))
    }
}

pub fn validate(doc: &SpecDocument) -> Vec<Diagnostic> {
    validate_with(doc, &Context::default())
}

pub fn validate_with(doc: &SpecDocument, ctx: &Context) -> Vec<Diagnostic> {
    match resolve(doc, ctx) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

pub fn resolve(doc: &SpecDocument, ctx: &Context) -> Result<Model, Vec<Diagnostic>> {
    let mut r = Resolver { doc, ctx, diags: Vec::new(), procs: BTreeMap::new(), in_progress: BTreeSet::new(), sets: HashMap::new(), sigma: BTreeSet::new() };
    r.run()
}

struct Resolver<'a> {
    doc: &'a SpecDocument,
    ctx: &'a Context,
    diags: Vec<Diagnostic>,
    procs: BTreeMap<String, Option<Lts>>,
    in_progress: BTreeSet<String>,
    sets: HashMap<String, Option<BTreeSet<Label>>>,
    sigma: BTreeSet<Label>,
}

fn update_label(s: &str) -> Label {
    Label::from_static(s)
}

impl<'a> Resolver<'a> {
    fn diag(&mut self, kind: DiagKind, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::new(kind, msg, span));
    }

    fn run(&mut self) -> Result<Model, Vec<Diagnostic>> {
        let mut seen: BTreeMap<&str, Span> = BTreeMap::new();
        for item in &self.doc.items {
            if let Some(n) = item.name() {
                if seen.insert(&n.text, n.span).is_some() {
                    self.diag(DiagKind::Duplicate, format!("`{}` is declared twice", n.text), n.span);
                } else if self.ctx.processes.contains_key(&n.text) || self.ctx.sets.contains_key(&n.text) {
                    self.diag(DiagKind::Duplicate, format!("`{}` is already provided by the context", n.text), n.span);
                }
            }
        }

        let mut processes = BTreeMap::new();
        let mut components = BTreeMap::new();
        for (n, l) in &self.ctx.processes {
            processes.insert(n.clone(), l.clone());
            components.insert(n.clone(), vec![n.clone()]);
        }
        for item in &self.doc.items {
            match item {
                Item::Process { name, .. } => {
                    if let Some(l) = self.process(&name.text) {
                        processes.insert(name.text.clone(), l);
                    }
                    components.insert(name.text.clone(), vec![name.text.clone()]);
                }
                Item::Composition { name, parts } => {
                    if let Some(l) = self.process(&name.text) {
                        processes.insert(name.text.clone(), l);
                    }
                    components.insert(name.text.clone(), parts.iter().map(|p| p.text.clone()).collect());
                }
                _ => {}
            }
        }

        let mut sigma: BTreeSet<Label> = processes.values().flat_map(|l| l.alphabet().iter().cloned()).collect();
        sigma.extend(UPDATE_EVENTS.iter().map(|e| update_label(e)));
        self.sigma = sigma.clone();

        let mut controllable: BTreeSet<Label> = self.ctx.controllable.clone();
        controllable.extend(UPDATE_EVENTS.iter().filter(|e| **e != HOT_SWAP).map(|e| update_label(e)));
        let mut uncontrollable = BTreeSet::from([update_label(HOT_SWAP)]);
        for item in &self.doc.items {
            match item {
                Item::Controllable { set, span } => {
                    if let Some(s) = self.eval_set(set) {
                        for l in &s {
                            if !sigma.contains(l) {
                                self.diag(DiagKind::AlphabetMismatch, format!("controllable event {l} occurs in no process"), *span);
                            }
                        }
                        controllable.extend(s);
                    }
                }
                Item::Uncontrollable { set, .. } => {
                    if let Some(s) = self.eval_set(set) {
                        uncontrollable.extend(s);
                    }
                }
                _ => {}
            }
        }
        for item in &self.doc.items {
            if let Item::Uncontrollable { span, .. } = item {
                for l in controllable.intersection(&uncontrollable) {
                    let msg = format!("event {l} is declared both controllable and uncontrollable");
                    self.diags.push(Diagnostic::new(DiagKind::PartitionOverlap, msg, *span));
                }
            }
        }
        if controllable.contains(&update_label(HOT_SWAP)) {
            let span = self.doc.items.iter().find(|i| matches!(i, Item::Controllable { .. })).map(Item::span).unwrap_or_default();
            self.diag(DiagKind::PartitionOverlap, "hotSwap is uncontrollable", span);
        }
        let alphabet = Alphabet::new(
            controllable.iter().cloned(),
            sigma.iter().filter(|l| !controllable.contains(*l)).cloned(),
        )
        .unwrap_or_default();

        let mut fluents = library_fluents();
        fluents.extend(self.ctx.fluents.iter().cloned());
        for item in &self.doc.items {
            if let Item::Fluent { name, initiating, terminating, initial } = item {
                let (Some(on), Some(off)) = (self.eval_set(initiating), self.eval_set(terminating)) else { continue };
                for l in on.iter().chain(&off) {
                    if !sigma.contains(l) {
                        self.diag(DiagKind::AlphabetMismatch, format!("fluent {} mentions event {l}, which occurs in no process", name.text), name.span);
                    }
                }
                if sigma.iter().any(|l| l.as_str() == name.text) {
                    self.diag(DiagKind::NameClash, format!("fluent {} has the same name as an event", name.text), name.span);
                }
                if fluents.iter().any(|f| f.name == name.text) {
                    self.diag(DiagKind::Duplicate, format!("fluent {} is already defined", name.text), name.span);
                }
                match FluentDef::new(name.text.clone(), on, off, *initial) {
                    Ok(d) => fluents.push(d),
                    Err(e) => self.diag(DiagKind::Overlap, e.to_string(), name.span),
                }
            }
        }
        let fluent_names: BTreeSet<String> = fluents.iter().map(|f| f.name.clone()).collect();
        let is_fluent = |n: &str| fluent_names.contains(n);

        let mut safety = BTreeMap::new();
        let mut liveness = BTreeMap::new();
        for item in &self.doc.items {
            match item {
                Item::Safety { name, formula } => {
                    let f = classify_safety(formula, &is_fluent);
                    for e in f.exprs() {
                        self.check_atoms(e, &fluent_names, name);
                    }
                    safety.insert(name.text.clone(), f);
                }
                Item::Liveness { name, formula } => {
                    let g = classify_liveness(formula, &is_fluent);
                    for e in g.assumptions.iter().chain(&g.guarantees) {
                        self.check_atoms(e, &fluent_names, name);
                    }
                    if g.guarantees.is_empty() {
                        self.diag(DiagKind::Invalid, format!("liveness {} has no guarantees", name.text), name.span);
                    }
                    liveness.insert(name.text.clone(), g);
                }
                _ => {}
            }
        }

        let mut control = Vec::new();
        let mut updates = Vec::new();
        for item in &self.doc.items {
            match item {
                Item::ControlProblem { name, env, safety: s, liveness: l } => {
                    self.expect_kind(env, "process", processes.contains_key(&env.text));
                    for n in s {
                        self.expect_kind(n, "safety assertion", safety.contains_key(&n.text));
                    }
                    if let Some(n) = l {
                        self.expect_kind(n, "liveness declaration", liveness.contains_key(&n.text));
                    }
                    control.push(ControlDecl {
                        name: name.text.clone(),
                        env: env.text.clone(),
                        safety: s.iter().map(|n| n.text.clone()).collect(),
                        liveness: l.as_ref().map(|n| n.text.clone()),
                    });
                }
                Item::UpdateProblem { name, old, new, maps, theta } => {
                    let is_problem = |n: &Name| self.doc.items.iter().any(|i| matches!(i, Item::ControlProblem { name, .. } if name.text == n.text));
                    let (old_ok, new_ok) = (is_problem(old), is_problem(new));
                    self.expect_kind(old, "control problem", old_ok);
                    self.expect_kind(new, "control problem", new_ok);
                    for t in theta {
                        self.expect_kind(t, "safety assertion", safety.contains_key(&t.text));
                    }
                    let env_of = |p: &Name| {
                        self.doc.items.iter().find_map(|i| match i {
                            Item::ControlProblem { name, env, .. } if name.text == p.text => Some(env.text.clone()),
                            _ => None,
                        })
                    };
                    let old_parts = env_of(old).and_then(|e| components.get(&e).cloned()).unwrap_or_default();
                    let new_parts = env_of(new).and_then(|e| components.get(&e).cloned()).unwrap_or_default();
                    let mut resolved = Vec::new();
                    for m in maps {
                        if !old_parts.contains(&m.from.text) {
                            self.diag(DiagKind::UnresolvedName, format!("`{}` is not a component of the old environment", m.from.text), m.from.span);
                            continue;
                        }
                        if !new_parts.contains(&m.to.text) {
                            self.diag(DiagKind::UnresolvedName, format!("`{}` is not a component of the new environment", m.to.text), m.to.span);
                            continue;
                        }
                        let (Some(a), Some(b)) = (processes.get(&m.from.text), processes.get(&m.to.text)) else { continue };
                        if let Some(map) = self.state_map(a, b, &m.pairs, m.span) {
                            let mut skip = BTreeSet::new();
                            for e in &m.except {
                                match lookup_state(a, e) {
                                    Some(s) => {
                                        skip.insert(s);
                                    }
                                    None => self.diag(DiagKind::UnresolvedName, format!("unknown state {}", state_text(e)), m.span),
                                }
                            }
                            for s in 0..a.num_states() as StateId {
                                if let Some(n) = a.state_name(s) {
                                    if b.state_by_name(n).is_some() && !map.contains(s) && !skip.contains(&s) {
                                        self.diag(DiagKind::PartialMap, format!("map {} -> {} has no entry for shared state {n}", m.from.text, m.to.text), m.span);
                                    }
                                }
                            }
                            resolved.push(ComponentMap { from: m.from.text.clone(), to: m.to.text.clone(), map });
                        }
                    }
                    updates.push(UpdateDecl {
                        name: name.text.clone(),
                        old: old.text.clone(),
                        new: new.text.clone(),
                        maps: resolved,
                        theta: theta.iter().map(|n| n.text.clone()).collect(),
                    });
                }
                _ => {}
            }
        }

        if !self.diags.is_empty() {
            return Err(std::mem::take(&mut self.diags));
        }
        Ok(Model { processes, components, fluents, safety, liveness, sigma, alphabet, control, updates })
    }

    fn expect_kind(&mut self, n: &Name, kind: &str, ok: bool) {
        if !ok {
            self.diag(DiagKind::UnresolvedName, format!("`{}` does not name a {kind}", n.text), n.span);
        }
    }

    fn check_atoms(&mut self, e: &BoolExpr, fluents: &BTreeSet<String>, owner: &Name) {
        let mut fl = BTreeSet::new();
        e.fluents(&mut fl);
        for f in fl {
            if !fluents.contains(&f) {
                self.diag(DiagKind::UnresolvedName, format!("`{f}` in {} is neither a fluent nor an event", owner.text), owner.span);
            }
        }
        let mut ev = BTreeSet::new();
        e.events(&mut ev);
        for l in ev {
            if !self.sigma.contains(&l) {
                self.diag(DiagKind::UnresolvedName, format!("`{l}` in {} is neither a fluent nor an event", owner.text), owner.span);
            }
        }
    }

    fn eval_set(&mut self, e: &SetExpr) -> Option<BTreeSet<Label>> {
        match e {
            SetExpr::Lit(v) => Some(v.iter().map(|l| l.label.clone()).collect()),
            SetExpr::Sigma(_) => Some(self.sigma.clone()),
            SetExpr::Union(a, b) => {
                let (a, b) = (self.eval_set(a), self.eval_set(b));
                Some(a?.union(&b?).cloned().collect())
            }
            SetExpr::Diff(a, b) => {
                let (a, b) = (self.eval_set(a), self.eval_set(b));
                Some(a?.difference(&b?).cloned().collect())
            }
            SetExpr::Ref(n) => {
                if let Some(s) = self.ctx.sets.get(&n.text) {
                    return Some(s.clone());
                }
                if let Some(v) = self.sets.get(&n.text) {
                    return v.clone();
                }
                if !self.in_progress.insert(format!("set {}", n.text)) {
                    self.diag(DiagKind::Invalid, format!("set `{}` is defined in terms of itself", n.text), n.span);
                    return None;
                }
                let def = self.doc.items.iter().find_map(|i| match i {
                    Item::Set { name, value } if name.text == n.text => Some(value),
                    _ => None,
                });
                let Some(def) = def else {
                    self.diag(DiagKind::UnresolvedName, format!("unknown set `{}`", n.text), n.span);
                    return None;
                };
                let v = self.eval_set(def);
                self.in_progress.remove(&format!("set {}", n.text));
                self.sets.insert(n.text.clone(), v.clone());
                v
            }
        }
    }

    fn process(&mut self, name: &str) -> Option<Lts> {
        if let Some(l) = self.ctx.processes.get(name) {
            return Some(l.clone());
        }
        if let Some(l) = self.procs.get(name) {
            return l.clone();
        }
        let item = self.doc.items.iter().find(|i| {
            matches!(i, Item::Process { name: n, .. } | Item::Composition { name: n, .. } if n.text == name)
        })?;
        if !self.in_progress.insert(name.to_string()) {
            let span = item.span();
            self.diag(DiagKind::Invalid, format!("process `{name}` is defined in terms of itself"), span);
            return None;
        }
        let out = match item {
            Item::Process { name: n, body, extra } => {
                let extra = match extra {
                    Some(e) => self.eval_set(e),
                    None => Some(BTreeSet::new()),
                };
                let lts = self.body(n, body);
                match (lts, extra) {
                    (Some(l), Some(x)) if !x.is_empty() => Some(extend_alphabet(&l, x)),
                    (l, _) => l,
                }
            }
            Item::Composition { parts, .. } => {
                let mut ok = Vec::new();
                for p in parts {
                    match self.process(&p.text) {
                        Some(l) => ok.push(l),
                        None => {
                            if !self.is_process_name(&p.text) {
                                self.diag(DiagKind::UnresolvedName, format!("unknown process `{}`", p.text), p.span);
                            }
                        }
                    }
                }
                (ok.len() == parts.len()).then(|| compose_all(&ok.iter().collect::<Vec<_>>()))
            }
            _ => None,
        };
        self.in_progress.remove(name);
        self.procs.insert(name.to_string(), out.clone());
        out
    }

    fn is_process_name(&self, n: &str) -> bool {
        self.ctx.processes.contains_key(n)
            || self.doc.items.iter().any(|i| matches!(i, Item::Process { name, .. } | Item::Composition { name, .. } if name.text == n))
    }

    fn body(&mut self, name: &Name, body: &ProcessBody) -> Option<Lts> {
        match body {
            ProcessBody::Equations(defs) => self.equations(defs),
            ProcessBody::Grid { rows, cols, init, blocked } => {
                let n = rows.checked_mul(*cols).filter(|&n| n > 0 && n <= 1 << 20);
                let Some(n) = n else {
                    self.diag(DiagKind::Invalid, "grid must have between 1 and 2^20 cells", name.span);
                    return None;
                };
                let blocked: BTreeSet<u32> = blocked.iter().copied().collect();
                let cells: Vec<u32> = (0..n).filter(|c| !blocked.contains(c)).collect();
                if !cells.contains(init) {
                    self.diag(DiagKind::Invalid, format!("initial cell {init} is not a cell of the grid"), name.span);
                    return None;
                }
                Some(movement_lts(&cells, &grid_adjacency(*rows, *cols, &blocked), *init))
            }
            ProcessBody::Moves { edges, init } => {
                let mut cells: BTreeSet<u32> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
                cells.insert(*init);
                let mut directed: BTreeSet<(u32, u32)> = BTreeSet::new();
                for &(a, b) in edges {
                    if a != b {
                        directed.insert((a, b));
                        directed.insert((b, a));
                    }
                }
                let cells: Vec<u32> = cells.into_iter().collect();
                Some(movement_lts(&cells, &directed.into_iter().collect::<Vec<_>>(), *init))
            }
            ProcessBody::Interrupt { first, second, label, map } => {
                let a = self.operand(first)?;
                let b = self.operand(second)?;
                let m = self.state_map(&a, &b, map, name.span)?;
                match interrupt(&a, &b, &label.label, &m) {
                    Ok(l) => Some(l),
                    Err(LtsError::PartialMap(s)) => {
                        let sn = a.state_name(s).map(str::to_string).unwrap_or_else(|| s.to_string());
                        self.diag(DiagKind::PartialMap, format!("interrupt map has no entry for state {sn} of {}", first.text), name.span);
                        None
                    }
                    Err(e) => {
                        self.diag(DiagKind::Invalid, e.to_string(), label.span);
                        None
                    }
                }
            }
        }
    }

    fn operand(&mut self, n: &Name) -> Option<Lts> {
        let l = self.process(&n.text);
        if l.is_none() && !self.is_process_name(&n.text) {
            self.diag(DiagKind::UnresolvedName, format!("unknown process `{}`", n.text), n.span);
        }
        l
    }

    fn state_map(&mut self, a: &Lts, b: &Lts, pairs: &[(StateRef, StateRef)], span: Span) -> Option<StateMap> {
        let mut m = StateMap::new();
        let mut ok = true;
        for (s, t) in pairs {
            match (lookup_state(a, s), lookup_state(b, t)) {
                (Some(s), Some(t)) => m.insert(s, t),
                (x, _) => {
                    let bad = if x.is_none() { s } else { t };
                    self.diag(DiagKind::UnresolvedName, format!("unknown state {}", state_text(bad)), span);
                    ok = false;
                }
            }
        }
        ok.then_some(m)
    }

    fn equations(&mut self, defs: &[LocalDef]) -> Option<Lts> {
        let mut index: BTreeMap<&str, StateId> = BTreeMap::new();
        let mut names = Vec::new();
        for d in defs {
            if index.insert(&d.name.text, names.len() as StateId).is_some() {
                self.diag(DiagKind::Duplicate, format!("local process `{}` is defined twice", d.name.text), d.name.span);
            }
            names.push(d.name.text.clone());
        }
        let mut stop: Option<StateId> = None;
        let mut transitions = Vec::new();
        let mut alphabet = BTreeSet::new();
        let mut ok = true;
        for (i, d) in defs.iter().enumerate() {
            for b in &d.branches {
                let target = match &b.target {
                    Target::Stop => *stop.get_or_insert_with(|| {
                        names.push("STOP".to_string());
                        (names.len() - 1) as StateId
                    }),
                    Target::Local(n) => match index.get(n.text.as_str()) {
                        Some(&t) => t,
                        None => {
                            self.diag(DiagKind::UnresolvedName, format!("unknown local process `{}`", n.text), n.span);
                            ok = false;
                            continue;
                        }
                    },
                };
                let mut from = i as StateId;
                for (k, a) in b.actions.iter().enumerate() {
                    alphabet.insert(a.label.clone());
                    let to = if k + 1 == b.actions.len() {
                        target
                    } else {
                        names.push(format!("{}#{}", d.name.text, names.len()));
                        (names.len() - 1) as StateId
                    };
                    transitions.push((from, a.label.clone(), to));
                    from = to;
                }
            }
        }
        if !ok {
            return None;
        }
        let n = names.len();
        Lts::from_parts(alphabet, n, 0, transitions).ok().map(|l| l.with_names(names))
    }
}

fn extend_alphabet(l: &Lts, extra: BTreeSet<Label>) -> Lts {
    let mut alphabet: BTreeSet<Label> = l.alphabet().iter().cloned().collect();
    alphabet.extend(extra);
    let t: Vec<(StateId, Label, StateId)> = l.transitions().map(|(s, a, d)| (s, a.clone(), d)).collect();
    let mut out = Lts::from_parts(alphabet, l.num_states(), l.initial(), t).expect("same states, larger alphabet");
    if l.has_names() {
        out = out.with_names((0..l.num_states() as StateId).map(|s| l.state_name(s).unwrap_or_default().to_string()).collect());
    }
    out
}

fn lookup_state(l: &Lts, s: &StateRef) -> Option<StateId> {
    match s {
        StateRef::Index(i) => ((*i as usize) < l.num_states()).then_some(*i),
        StateRef::Name(n) => l.state_by_name(n),
    }
}

fn state_text(s: &StateRef) -> String {
    match s {
        StateRef::Index(i) => i.to_string(),
        StateRef::Name(n) => n.clone(),
    }
}
