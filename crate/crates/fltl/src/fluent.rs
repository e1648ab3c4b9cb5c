use std::collections::{BTreeMap, BTreeSet};

use skyweave_lts::Label;

use crate::FltlError;

/// A fluent `<initiating, terminating, initial>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluentDef {
    pub name: String,
    pub initiating: BTreeSet<Label>,
    pub terminating: BTreeSet<Label>,
    pub initial: bool,
}

impl FluentDef {
    pub fn new(
        name: impl Into<String>,
        initiating: impl IntoIterator<Item = Label>,
        terminating: impl IntoIterator<Item = Label>,
        initial: bool,
    ) -> Result<FluentDef, FltlError> {
        let def = FluentDef {
            name: name.into(),
            initiating: initiating.into_iter().collect(),
            terminating: terminating.into_iter().collect(),
            initial,
        };
        def.check()?;
        Ok(def)
    }

    /// Latching fluent: false until `ev` happens, then true forever.
    pub fn latch(name: impl Into<String>, ev: Label) -> FluentDef {
        FluentDef { name: name.into(), initiating: BTreeSet::from([ev]), terminating: BTreeSet::new(), initial: false }
    }

    pub fn check(&self) -> Result<(), FltlError> {
        if let Some(l) = self.initiating.intersection(&self.terminating).next() {
            return Err(FltlError::OverlappingSets { fluent: self.name.clone(), label: l.clone() });
        }
        Ok(())
    }

    /// Value after `ev`, given the value before.
    pub fn next(&self, before: bool, ev: &Label) -> bool {
        if self.initiating.contains(ev) {
            true
        } else if self.terminating.contains(ev) {
            false
        } else {
            before
        }
    }
}

/// Truth value of every fluent of a document.
pub type Valuation = BTreeMap<String, bool>;

pub fn initial_valuation(defs: &[FluentDef]) -> Result<Valuation, FltlError> {
    let mut v = Valuation::new();
    for d in defs {
        if v.insert(d.name.clone(), d.initial).is_some() {
            return Err(FltlError::DuplicateFluentName(d.name.clone()));
        }
    }
    Ok(v)
}

pub fn advance(v: &Valuation, ev: &Label, defs: &[FluentDef]) -> Valuation {
    let mut out = v.clone();
    for d in defs {
        let before = v.get(&d.name).copied().unwrap_or(d.initial);
        out.insert(d.name.clone(), d.next(before, ev));
    }
    out
}
