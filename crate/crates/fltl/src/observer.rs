//! Deterministic observers for the safety fragment.
//!
//! An observer state is a packed bit vector holding the value of every
//! tracked fluent, one "armed" bit per guard and one pending bit per
//! weak-until clause. Stepping returns `None` when a clause is violated,
//! which callers treat as the absorbing error state.

use std::collections::{BTreeSet, HashMap};

use skyweave_lts::Label;

use crate::{BoolExpr, FltlError, FluentDef, SafetyFormula, Valuation};

pub type ObsState = Box<[u64]>;

/// When the clauses of a formula are checked.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    /// From the first event on.
    Always,
    /// Until `l` occurs; the position of `l` itself is not checked.
    Until(Label),
    /// From the first occurrence of `l` on, including that position.
    From(Label),
}

#[derive(Clone, Debug)]
enum CExpr {
    Const(bool),
    Bit(u32),
    Not(Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
}

impl CExpr {
    fn eval(&self, st: &[u64]) -> bool {
        match self {
            CExpr::Const(b) => *b,
            CExpr::Bit(i) => get(st, *i),
            CExpr::Not(e) => !e.eval(st),
            CExpr::And(v) => v.iter().all(|e| e.eval(st)),
            CExpr::Or(v) => v.iter().any(|e| e.eval(st)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ClauseKind {
    Always,
    Until,
    Response,
}

#[derive(Clone, Debug)]
struct Clause {
    guard: u32,
    kind: ClauseKind,
    trigger: CExpr,
    hold: CExpr,
    release: CExpr,
    pending: u32,
}

#[derive(Clone, Debug)]
enum GuardKind {
    Always,
    Until(Option<u32>),
    From(Option<u32>),
}

fn get(st: &[u64], i: u32) -> bool {
    st[(i / 64) as usize] >> (i % 64) & 1 == 1
}

fn put(st: &mut [u64], i: u32, v: bool) {
    let w = &mut st[(i / 64) as usize];
    if v {
        *w |= 1 << (i % 64);
    } else {
        *w &= !(1 << (i % 64));
    }
}

enum Tracked {
    Named(FluentDef),
    Event(Label),
}

pub struct ObserverBuilder {
    alphabet: Vec<Label>,
    defs: HashMap<String, FluentDef>,
    tracked: Vec<Tracked>,
    bit_of: HashMap<String, u32>,
    guards: Vec<Guard>,
    clauses: Vec<(u32, ClauseKind, CExpr, CExpr, CExpr)>,
    exprs: Vec<CExpr>,
}

impl ObserverBuilder {
    pub fn new(alphabet: impl IntoIterator<Item = Label>, defs: &[FluentDef]) -> Result<ObserverBuilder, FltlError> {
        let mut map = HashMap::new();
        for d in defs {
            d.check()?;
            if map.insert(d.name.clone(), d.clone()).is_some() {
                return Err(FltlError::DuplicateFluentName(d.name.clone()));
            }
        }
        let alphabet: Vec<Label> = alphabet.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(ObserverBuilder {
            alphabet,
            defs: map,
            tracked: Vec::new(),
            bit_of: HashMap::new(),
            guards: Vec::new(),
            clauses: Vec::new(),
            exprs: Vec::new(),
        })
    }

    /// Tracks a named fluent even if no formula mentions it.
    pub fn track(&mut self, name: &str) -> Result<u32, FltlError> {
        if let Some(&b) = self.bit_of.get(name) {
            return Ok(b);
        }
        let def = self.defs.get(name).ok_or_else(|| FltlError::UnknownFluent(name.to_string()))?.clone();
        let b = self.tracked.len() as u32;
        self.tracked.push(Tracked::Named(def));
        self.bit_of.insert(name.to_string(), b);
        Ok(b)
    }

    fn track_event(&mut self, l: &Label) -> u32 {
        let key = format!("@{l}");
        if let Some(&b) = self.bit_of.get(&key) {
            return b;
        }
        let b = self.tracked.len() as u32;
        self.tracked.push(Tracked::Event(l.clone()));
        self.bit_of.insert(key, b);
        b
    }

    fn compile(&mut self, e: &BoolExpr) -> Result<CExpr, FltlError> {
        Ok(match e {
            BoolExpr::Const(b) => CExpr::Const(*b),
            BoolExpr::Fluent(n) => CExpr::Bit(self.track(n)?),
            BoolExpr::Event(l) => {
                if self.alphabet.binary_search(l).is_ok() {
                    CExpr::Bit(self.track_event(l))
                } else {
                    CExpr::Const(false)
                }
            }
            BoolExpr::Not(x) => CExpr::Not(Box::new(self.compile(x)?)),
            BoolExpr::And(v) => CExpr::And(v.iter().map(|x| self.compile(x)).collect::<Result<_, _>>()?),
            BoolExpr::Or(v) => CExpr::Or(v.iter().map(|x| self.compile(x)).collect::<Result<_, _>>()?),
            BoolExpr::Implies(a, b) => CExpr::Or(vec![CExpr::Not(Box::new(self.compile(a)?)), self.compile(b)?]),
        })
    }

    fn guard_index(&mut self, g: Guard) -> u32 {
        match self.guards.iter().position(|x| *x == g) {
            Some(i) => i as u32,
            None => {
                self.guards.push(g);
                (self.guards.len() - 1) as u32
            }
        }
    }

    pub fn add_safety(&mut self, f: &SafetyFormula, guard: Guard) -> Result<(), FltlError> {
        let g = self.guard_index(guard);
        self.add_clauses(f, g)
    }

    fn add_clauses(&mut self, f: &SafetyFormula, g: u32) -> Result<(), FltlError> {
        match f {
            SafetyFormula::Conj(v) => {
                for x in v {
                    self.add_clauses(x, g)?;
                }
            }
            SafetyFormula::Always(b) => {
                let hold = self.compile(b)?;
                if !matches!(hold, CExpr::Const(true)) {
                    self.clauses.push((g, ClauseKind::Always, CExpr::Const(true), hold, CExpr::Const(false)));
                }
            }
            SafetyFormula::WeakUntil(h, r) => {
                let hold = self.compile(h)?;
                let release = self.compile(r)?;
                self.clauses.push((g, ClauseKind::Until, CExpr::Const(true), hold, release));
            }
            SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release } => {
                let t = self.compile(trigger)?;
                let h = self.compile(hold)?;
                let r = self.compile(release)?;
                self.clauses.push((g, ClauseKind::Response, t, h, r));
            }
        }
        Ok(())
    }

    /// Registers an expression for later evaluation with [`Observer::eval`].
    pub fn add_expr(&mut self, e: &BoolExpr) -> Result<usize, FltlError> {
        let c = self.compile(e)?;
        self.exprs.push(c);
        Ok(self.exprs.len() - 1)
    }

    pub fn build(self) -> Observer {
        let nf = self.tracked.len() as u32;
        let ng = self.guards.len() as u32;
        let mut next_bit = nf + ng;
        let clauses: Vec<Clause> = self
            .clauses
            .into_iter()
            .map(|(guard, kind, trigger, hold, release)| {
                let pending = if kind == ClauseKind::Always {
                    u32::MAX
                } else {
                    next_bit += 1;
                    next_bit - 1
                };
                Clause { guard, kind, trigger, hold, release, pending }
            })
            .collect();
        let words = (next_bit as usize).div_ceil(64).max(1);
        let vwords = (nf as usize).div_ceil(64);

        let mut set = vec![vec![0u64; vwords]; self.alphabet.len()];
        let mut clear = vec![vec![0u64; vwords]; self.alphabet.len()];
        for (b, t) in self.tracked.iter().enumerate() {
            for (li, l) in self.alphabet.iter().enumerate() {
                let (on, off) = match t {
                    Tracked::Named(d) => (d.initiating.contains(l), !d.initiating.contains(l) && d.terminating.contains(l)),
                    Tracked::Event(e) => (e == l, e != l),
                };
                if on {
                    put(&mut set[li], b as u32, true);
                }
                if off {
                    put(&mut clear[li], b as u32, true);
                }
            }
        }

        let label_idx = |l: &Label| self.alphabet.binary_search(l).ok().map(|i| i as u32);
        let guards: Vec<GuardKind> = self
            .guards
            .iter()
            .map(|g| match g {
                Guard::Always => GuardKind::Always,
                Guard::Until(l) => GuardKind::Until(label_idx(l)),
                Guard::From(l) => GuardKind::From(label_idx(l)),
            })
            .collect();

        let mut init = vec![0u64; words].into_boxed_slice();
        for (b, t) in self.tracked.iter().enumerate() {
            if let Tracked::Named(d) = t {
                put(&mut init, b as u32, d.initial);
            }
        }
        for (g, k) in guards.iter().enumerate() {
            put(&mut init, nf + g as u32, !matches!(k, GuardKind::From(_)));
        }
        for c in &clauses {
            if c.kind == ClauseKind::Until {
                put(&mut init, c.pending, true);
            }
        }
        let names = self
            .tracked
            .iter()
            .map(|t| match t {
                Tracked::Named(d) => d.name.clone(),
                Tracked::Event(l) => format!("@{l}"),
            })
            .collect();
        Observer { alphabet: self.alphabet, names, nf, set, clear, guards, clauses, exprs: self.exprs, init, words }
    }
}

/// Compiled observer; see the module docs.
#[derive(Clone, Debug)]
pub struct Observer {
    alphabet: Vec<Label>,
    names: Vec<String>,
    nf: u32,
    set: Vec<Vec<u64>>,
    clear: Vec<Vec<u64>>,
    guards: Vec<GuardKind>,
    clauses: Vec<Clause>,
    exprs: Vec<CExpr>,
    init: ObsState,
    words: usize,
}

impl Observer {
    pub fn alphabet(&self) -> &[Label] {
        &self.alphabet
    }

    pub fn label_index(&self, l: &str) -> Option<u32> {
        self.alphabet.binary_search_by(|x| x.as_str().cmp(l)).ok().map(|i| i as u32)
    }

    pub fn initial(&self) -> ObsState {
        self.init.clone()
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Successor after the event with alphabet index `li`, or `None` if
    /// that event violates a clause.
    pub fn step(&self, st: &[u64], li: u32) -> Option<ObsState> {
        let mut next: ObsState = st.into();
        let li = li as usize;
        for (w, (s, c)) in self.set[li].iter().zip(&self.clear[li]).enumerate() {
            next[w] = (next[w] | s) & !c;
        }
        for (g, kind) in self.guards.iter().enumerate() {
            let bit = self.nf + g as u32;
            let was = get(st, bit);
            let now = match kind {
                GuardKind::Always => true,
                GuardKind::Until(l) => was && *l != Some(li as u32),
                GuardKind::From(l) => was || *l == Some(li as u32),
            };
            put(&mut next, bit, now);
        }
        for c in &self.clauses {
            let armed = get(&next, self.nf + c.guard);
            if !armed {
                if matches!(self.guards[c.guard as usize], GuardKind::Until(_)) && c.kind != ClauseKind::Always {
                    put(&mut next, c.pending, false);
                }
                continue;
            }
            match c.kind {
                ClauseKind::Always => {
                    if !c.hold.eval(&next) {
                        return None;
                    }
                }
                ClauseKind::Until | ClauseKind::Response => {
                    let mut p = get(&next, c.pending);
                    if c.kind == ClauseKind::Response {
                        p = p || c.trigger.eval(&next);
                    }
                    p = p && !c.release.eval(&next);
                    if p && !c.hold.eval(&next) {
                        return None;
                    }
                    put(&mut next, c.pending, p);
                }
            }
        }
        Some(next)
    }

    /// Runs a whole trace. `Err(i)` is the index of the violating event.
    pub fn run<'a>(&self, trace: impl IntoIterator<Item = &'a Label>) -> Result<ObsState, usize> {
        let mut st = self.initial();
        for (i, l) in trace.into_iter().enumerate() {
            let li = self.label_index(l.as_str()).ok_or(i)?;
            st = self.step(&st, li).ok_or(i)?;
        }
        Ok(st)
    }

    pub fn eval(&self, expr: usize, st: &[u64]) -> bool {
        self.exprs[expr].eval(st)
    }

    pub fn fluent_value(&self, st: &[u64], name: &str) -> Option<bool> {
        self.names.iter().position(|n| n == name).map(|b| get(st, b as u32))
    }

    /// Values of the tracked named fluents.
    pub fn valuation(&self, st: &[u64]) -> Valuation {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.starts_with('@'))
            .map(|(b, n)| (n.clone(), get(st, b as u32)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Label {
        Label::from_static(s)
    }

    #[test]
    fn shorthand_event_holds_only_right_after() {
        let mut b = ObserverBuilder::new([l("a"), l("b")], &[]).unwrap();
        let e = b.add_expr(&BoolExpr::event("a")).unwrap();
        let o = b.build();
        let s1 = o.step(&o.initial(), o.label_index("a").unwrap()).unwrap();
        assert!(o.eval(e, &s1));
        let s2 = o.step(&s1, o.label_index("b").unwrap()).unwrap();
        assert!(!o.eval(e, &s2));
    }

    #[test]
    fn guards_arm_and_disarm() {
        let never_a = SafetyFormula::Always(BoolExpr::not(BoolExpr::event("a")));
        let trace = |o: &Observer, t: &[&str]| o.run(t.iter().map(|x| Box::leak(Box::new(l(x))) as &Label).collect::<Vec<_>>()).map(|_| ());
        let mut b = ObserverBuilder::new([l("a"), l("stop"), l("start")], &[]).unwrap();
        b.add_safety(&never_a, Guard::Until(l("stop"))).unwrap();
        let o = b.build();
        assert_eq!(trace(&o, &["a"]), Err(0));
        assert_eq!(trace(&o, &["stop", "a"]), Ok(()));

        let mut b = ObserverBuilder::new([l("a"), l("stop"), l("start")], &[]).unwrap();
        b.add_safety(&never_a, Guard::From(l("start"))).unwrap();
        let o = b.build();
        assert_eq!(trace(&o, &["a", "start"]), Ok(()));
        assert_eq!(trace(&o, &["start", "a"]), Err(1));
    }
}
