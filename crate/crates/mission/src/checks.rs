//! Evaluation of scenario assertions against a run.

use std::collections::BTreeSet;

use skyweave_enactor::{Dir, Record};
use skyweave_fltl::FluentDef;
use skyweave_simworld::{Grid, Visit};

use crate::scenario::Check;

/// What a check may look at.
pub struct RunView<'a> {
    pub log: &'a [Record],
    pub visits: &'a [Visit],
    pub grid: &'a Grid,
    pub mode: &'a str,
    pub bound: &'a BTreeSet<String>,
    pub fluents: &'a [FluentDef],
    pub now: u64,
}

/// Events the controller took part in, in order.
fn trace(log: &[Record]) -> Vec<&Record> {
    log.iter().filter(|r| matches!(r.dir, Dir::In | Dir::Out)).collect()
}

/// Window of the trace opened by `after` (in order) and closed by `before`.
/// Returns trace indices and the ticks bounding it.
fn window(t: &[&Record], after: &[String], before: Option<&String>, now: u64) -> Result<(usize, usize, u64, u64), String> {
    let mut start = 0;
    let mut start_tick = 0;
    for m in after {
        let i = t[start..].iter().position(|r| &r.label == m).ok_or_else(|| format!("{m} never happened"))?;
        start += i + 1;
        start_tick = t[start - 1].tick;
    }
    let (end, end_tick) = match before {
        Some(b) => match t[start..].iter().position(|r| &r.label == b) {
            Some(i) => (start + i, t[start + i].tick),
            None => return Err(format!("{b} never happened after the window opened")),
        },
        None => (t.len(), now),
    };
    Ok((start, end, start_tick, end_tick))
}

pub fn evaluate(c: &Check, v: &RunView) -> Result<(), String> {
    let t = trace(v.log);
    match c {
        Check::Never { events, after, before } => {
            let (s, e, _, _) = window(&t, after, before.as_ref(), v.now)?;
            match t[s..e].iter().find(|r| events.contains(&r.label)) {
                Some(r) => Err(format!("{} at tick {}", r.label, r.tick)),
                None => Ok(()),
            }
        }
        Check::OnlyVisit { cells, after, before } => {
            let (_, _, from, to) = window(&t, after, before.as_ref(), v.now)?;
            match v.visits.iter().find(|x| x.tick > from && x.tick <= to && !cells.contains(&x.cell)) {
                Some(x) => Err(format!("visited {} at tick {}", x.cell, x.tick)),
                None => Ok(()),
            }
        }
        Check::Covered { region, after, before } => {
            let cells = v.grid.region(region).ok_or_else(|| format!("no region {region}"))?;
            let (_, _, from, to) = window(&t, after, before.as_ref(), v.now)?;
            let seen: BTreeSet<u32> = v.visits.iter().filter(|x| x.tick > from && x.tick <= to).map(|x| x.cell).collect();
            let missing: Vec<u32> = cells.difference(&seen).copied().collect();
            if missing.is_empty() {
                Ok(())
            } else {
                Err(format!("cells {missing:?} not visited between ticks {from} and {to}"))
            }
        }
        Check::Recurs { events, window } => {
            let from = v.now.saturating_sub(*window);
            let missing: Vec<&String> = events.iter().filter(|e| !t.iter().any(|r| r.tick > from && &r.label == *e)).collect();
            if missing.is_empty() {
                Ok(())
            } else {
                Err(format!("{missing:?} absent from the last {window} ticks"))
            }
        }
        Check::Fluent { fluent, at, value } => {
            let def = v.fluents.iter().find(|f| &f.name == fluent).ok_or_else(|| format!("no fluent {fluent}"))?;
            let mut cur = def.initial;
            let mut hits = 0;
            for r in &t {
                if &r.label == at {
                    hits += 1;
                    if cur != *value {
                        return Err(format!("{fluent} is {cur} at {at} on tick {}", r.tick));
                    }
                }
                cur = def.next(cur, &skyweave_lts::Label::from_static(&r.label));
            }
            if hits == 0 {
                return Err(format!("{at} never happened"));
            }
            Ok(())
        }
        Check::Mode { mode } => {
            if v.mode == mode {
                Ok(())
            } else {
                Err(format!("mode is {}", v.mode))
            }
        }
        Check::Fallbacks { count } => {
            let n = v.log.iter().filter(|r| r.dir == Dir::Fallback).count();
            if n == *count {
                Ok(())
            } else {
                Err(format!("{n} fallbacks"))
            }
        }
        Check::Bound { module } => {
            if v.bound.contains(module) {
                Ok(())
            } else {
                Err(format!("{module} is not bound"))
            }
        }
    }
}
