use std::fmt::Write;

use crate::ast::*;

pub fn emit(doc: &SpecDocument) -> String {
    let mut out = String::new();
    for (i, item) in doc.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        emit_item(&mut out, item);
        out.push('\n');
    }
    out
}

fn set(e: &SetExpr) -> String {
    match e {
        SetExpr::Lit(v) => format!("{{{}}}", v.iter().map(|l| l.label.as_str()).collect::<Vec<_>>().join(", ")),
        SetExpr::Ref(n) => n.text.clone(),
        SetExpr::Sigma(_) => "Sigma".into(),
        SetExpr::Union(a, b) => format!("{} + {}", set(a), operand(b)),
        SetExpr::Diff(a, b) => format!("{} \\ {}", set(a), operand(b)),
    }
}

fn operand(e: &SetExpr) -> String {
    match e {
        SetExpr::Union(..) | SetExpr::Diff(..) => format!("({})", set(e)),
        _ => set(e),
    }
}

fn state(s: &StateRef) -> String {
    match s {
        StateRef::Index(i) => i.to_string(),
        StateRef::Name(n) => {
            let plain = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '?');
            if plain {
                n.clone()
            } else {
                format!("{n:?}")
            }
        }
    }
}

fn state_map(pairs: &[(StateRef, StateRef)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(a, b)| format!("{} -> {}", state(a), state(b))).collect();
    format!("{{{}}}", body.join(", "))
}

fn names(v: &[Name]) -> String {
    v.iter().map(|n| n.text.as_str()).collect::<Vec<_>>().join(", ")
}

fn emit_item(out: &mut String, item: &Item) {
    match item {
        Item::Set { name, value } => {
            let _ = write!(out, "set {} = {}.", name.text, set(value));
        }
        Item::Process { name, body, extra } => {
            let _ = write!(out, "{} = ", name.text);
            match body {
                ProcessBody::Equations(defs) => {
                    for (i, d) in defs.iter().enumerate() {
                        if i > 0 {
                            let _ = write!(out, ",\n  {} = ", d.name.text);
                        }
                        if d.branches.is_empty() {
                            out.push_str("STOP");
                            continue;
                        }
                        out.push('(');
                        for (k, b) in d.branches.iter().enumerate() {
                            if k > 0 {
                                out.push_str("\n    | ");
                            }
                            for a in &b.actions {
                                let _ = write!(out, "{} -> ", a.label);
                            }
                            match &b.target {
                                Target::Stop => out.push_str("STOP"),
                                Target::Local(n) => out.push_str(&n.text),
                            }
                        }
                        out.push(')');
                    }
                }
                ProcessBody::Grid { rows, cols, init, blocked } => {
                    let _ = write!(out, "grid({rows}, {cols}, {init}");
                    if !blocked.is_empty() {
                        let b: Vec<String> = blocked.iter().map(u32::to_string).collect();
                        let _ = write!(out, ", {{{}}}", b.join(", "));
                    }
                    out.push(')');
                }
                ProcessBody::Moves { edges, init } => {
                    let e: Vec<String> = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                    let _ = write!(out, "moves({{{}}}, {init})", e.join(", "));
                }
                ProcessBody::Interrupt { first, second, label, map } => {
                    let _ = write!(out, "interrupt({}, {}, {}, {})", first.text, second.text, label.label, state_map(map));
                }
            }
            if let Some(x) = extra {
                let _ = write!(out, " + {}", operand(x));
            }
            out.push('.');
        }
        Item::Composition { name, parts } => {
            let p: Vec<&str> = parts.iter().map(|n| n.text.as_str()).collect();
            let _ = write!(out, "||{} = ({}).", name.text, p.join(" || "));
        }
        Item::Controllable { set: s, .. } => {
            let _ = write!(out, "controllable = {}.", set(s));
        }
        Item::Uncontrollable { set: s, .. } => {
            let _ = write!(out, "uncontrollable = {}.", set(s));
        }
        Item::Fluent { name, initiating, terminating, initial } => {
            let _ = write!(out, "fluent {} = <{}, {}, init {}>.", name.text, set(initiating), set(terminating), initial);
        }
        Item::Safety { name, formula } => {
            let _ = write!(out, "assert safety {} = {}.", name.text, formula);
        }
        Item::Liveness { name, formula } => {
            let _ = write!(out, "liveness {} = {}.", name.text, formula);
        }
        Item::ControlProblem { name, env, safety, liveness } => {
            let _ = writeln!(out, "problem control {} {{", name.text);
            let _ = writeln!(out, "  env = {};", env.text);
            if !safety.is_empty() {
                let _ = writeln!(out, "  safety = {};", names(safety));
            }
            if let Some(l) = liveness {
                let _ = writeln!(out, "  liveness = {};", l.text);
            }
            out.push('}');
        }
        Item::UpdateProblem { name, old, new, maps, theta } => {
            let _ = writeln!(out, "problem update {} {{", name.text);
            let _ = writeln!(out, "  old = {};", old.text);
            let _ = writeln!(out, "  new = {};", new.text);
            for m in maps {
                let _ = write!(out, "  map {} -> {} {}", m.from.text, m.to.text, state_map(&m.pairs));
                if !m.except.is_empty() {
                    let e: Vec<String> = m.except.iter().map(state).collect();
                    let _ = write!(out, " except {{{}}}", e.join(", "));
                }
                out.push_str(";\n");
            }
            if !theta.is_empty() {
                let _ = writeln!(out, "  theta = {};", names(theta));
            }
            out.push('}');
        }
    }
}
