//! Safety monitors as explicit LTSs and single-trace checking.

use std::collections::HashMap;

use skyweave_lts::{Label, Lts, StateId};

use crate::observer::{Guard, ObsState, Observer, ObserverBuilder};
use crate::{FltlError, FluentDef, SafetyFormula};

/// Deterministic, complete monitor. Every violating event leads to `error`,
/// which is absorbing.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub lts: Lts,
    pub error: StateId,
    pub observer: Observer,
    pub states: Vec<ObsState>,
}

impl Monitor {
    pub fn accepts(&self, trace: &[Label]) -> bool {
        let mut s = self.lts.initial();
        for l in trace {
            let Some(li) = self.lts.label_index(l.as_str()) else { return false };
            match self.lts.out(s).iter().find(|(x, _)| *x == li) {
                Some(&(_, t)) => s = t,
                None => return false,
            }
            if s == self.error {
                return false;
            }
        }
        true
    }
}

pub fn compile_safety(
    formula: &SafetyFormula,
    defs: &[FluentDef],
    alphabet: impl IntoIterator<Item = Label>,
) -> Result<Monitor, FltlError> {
    let mut b = ObserverBuilder::new(alphabet, defs)?;
    b.add_safety(formula, Guard::Always)?;
    Ok(materialise(b.build()))
}

/// Explores the reachable observer states breadth-first.
pub fn materialise(observer: Observer) -> Monitor {
    let alphabet: Vec<Label> = observer.alphabet().to_vec();
    let mut index: HashMap<ObsState, StateId> = HashMap::new();
    let mut states = vec![observer.initial()];
    index.insert(observer.initial(), 0);
    let mut adj: Vec<Vec<(u32, StateId)>> = Vec::new();
    let mut error_edges = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut row = Vec::new();
        for li in 0..alphabet.len() as u32 {
            match observer.step(&states[i], li) {
                Some(next) => {
                    let id = *index.entry(next.clone()).or_insert_with(|| {
                        states.push(next);
                        (states.len() - 1) as StateId
                    });
                    row.push((li, id));
                }
                None => error_edges.push((i, li)),
            }
        }
        adj.push(row);
        i += 1;
    }
    let error = states.len() as StateId;
    for (s, li) in error_edges {
        adj[s].push((li, error));
    }
    adj.push((0..alphabet.len() as u32).map(|li| (li, error)).collect());
    let mut names: Vec<String> = (0..states.len()).map(|i| format!("m{i}")).collect();
    names.push("ERROR".to_string());
    let lts = Lts::from_adjacency(alphabet, 0, adj).with_names(names);
    Monitor { lts, error, observer, states }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceVerdict {
    Ok,
    /// Index of the first event whose occurrence violates the formula.
    Violated { at: usize },
}

pub fn check_trace(formula: &SafetyFormula, trace: &[Label], defs: &[FluentDef]) -> Result<TraceVerdict, FltlError> {
    let mut alphabet: Vec<Label> = trace.to_vec();
    for d in defs {
        alphabet.extend(d.initiating.iter().cloned());
        alphabet.extend(d.terminating.iter().cloned());
    }
    alphabet.extend(formula.events());
    let mut b = ObserverBuilder::new(alphabet, defs)?;
    b.add_safety(formula, Guard::Always)?;
    let o = b.build();
    Ok(match o.run(trace) {
        Ok(_) => TraceVerdict::Ok,
        Err(at) => TraceVerdict::Violated { at },
    })
}
