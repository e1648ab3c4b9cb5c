//! Plain-text transition tables and Graphviz output for controllers.
//!
//! ```text
//! controller Patrol
//! alphabet at.0 at.1 go.0 go.1
//! initial 0
//! states 2
//! 0 go.1 1
//! 1 at.1 0
//! ```

use std::fmt::Write as _;

use skyweave_lts::{Label, Lts, StateId};

use crate::SynthError;

pub fn to_table(name: &str, lts: &Lts) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "controller {name}");
    let alpha: Vec<&str> = lts.alphabet().iter().map(Label::as_str).collect();
    let _ = writeln!(out, "alphabet {}", alpha.join(" "));
    let _ = writeln!(out, "initial {}", lts.initial());
    let _ = writeln!(out, "states {}", lts.num_states());
    for (s, l, t) in lts.transitions() {
        let _ = writeln!(out, "{s} {l} {t}");
    }
    out
}

pub fn to_dot(name: &str, lts: &Lts) -> String {
    lts.to_dot(name)
}

/// Parses [`to_table`] output back into `(name, lts)`.
pub fn parse_table(text: &str) -> Result<(String, Lts), SynthError> {
    let bad = |line: usize, msg: &str| SynthError::Table { line: line + 1, message: msg.to_string() };
    let mut name = None;
    let mut alphabet: Vec<Label> = Vec::new();
    let mut initial = None;
    let mut states = None;
    let mut transitions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        match head {
            "controller" => name = Some(words.collect::<Vec<_>>().join(" ")),
            "alphabet" => {
                for w in words {
                    alphabet.push(Label::new(w).map_err(|e| bad(i, &e.to_string()))?);
                }
            }
            "initial" | "states" => {
                let v: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| bad(i, "expected a number"))?;
                if head == "initial" {
                    initial = Some(v as StateId);
                } else {
                    states = Some(v);
                }
            }
            _ => {
                let s: StateId = head.parse().map_err(|_| bad(i, "expected a source state"))?;
                let l = words.next().ok_or_else(|| bad(i, "expected a label"))?;
                let l = Label::new(l).map_err(|e| bad(i, &e.to_string()))?;
                let t: StateId = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| bad(i, "expected a target state"))?;
                if words.next().is_some() {
                    return Err(bad(i, "trailing input"));
                }
                transitions.push((s, l, t));
            }
        }
    }
    let states = states.ok_or_else(|| bad(0, "missing `states`"))?;
    let lts = Lts::from_parts(alphabet, states, initial.unwrap_or(0), transitions).map_err(|e| bad(0, &e.to_string()))?;
    Ok((name.unwrap_or_default(), lts))
}
