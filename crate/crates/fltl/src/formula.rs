use std::collections::BTreeSet;
use std::fmt;

use skyweave_lts::Label;

/// Boolean combination of fluents. `Event(l)` is the shorthand fluent that
/// holds exactly at the position where `l` occurred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Fluent(String),
    Event(Label),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn fluent(name: &str) -> BoolExpr {
        BoolExpr::Fluent(name.to_string())
    }

    pub fn event(l: &str) -> BoolExpr {
        BoolExpr::Event(Label::from_static(l))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(e))
    }

    pub fn implies(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn fluents(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Fluent(n) => {
                out.insert(n.clone());
            }
            BoolExpr::Const(_) | BoolExpr::Event(_) => {}
            BoolExpr::Not(e) => e.fluents(out),
            BoolExpr::And(v) | BoolExpr::Or(v) => v.iter().for_each(|e| e.fluents(out)),
            BoolExpr::Implies(a, b) => {
                a.fluents(out);
                b.fluents(out);
            }
        }
    }

    pub fn events(&self, out: &mut BTreeSet<Label>) {
        match self {
            BoolExpr::Event(l) => {
                out.insert(l.clone());
            }
            BoolExpr::Const(_) | BoolExpr::Fluent(_) => {}
            BoolExpr::Not(e) => e.events(out),
            BoolExpr::And(v) | BoolExpr::Or(v) => v.iter().for_each(|e| e.events(out)),
            BoolExpr::Implies(a, b) => {
                a.events(out);
                b.events(out);
            }
        }
    }

    /// Evaluates with a lookup for fluents and the last event for shorthands.
    pub fn eval(&self, fluent: &dyn Fn(&str) -> bool, last: Option<&Label>) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Fluent(n) => fluent(n),
            BoolExpr::Event(l) => last == Some(l),
            BoolExpr::Not(e) => !e.eval(fluent, last),
            BoolExpr::And(v) => v.iter().all(|e| e.eval(fluent, last)),
            BoolExpr::Or(v) => v.iter().any(|e| e.eval(fluent, last)),
            BoolExpr::Implies(a, b) => !a.eval(fluent, last) || b.eval(fluent, last),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            BoolExpr::Implies(..) => 1,
            BoolExpr::Or(v) if v.len() > 1 => 2,
            BoolExpr::And(v) if v.len() > 1 => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.prec();
        if p < min {
            f.write_str("(")?;
        }
        match self {
            BoolExpr::Const(true) => f.write_str("true")?,
            BoolExpr::Const(false) => f.write_str("false")?,
            BoolExpr::Fluent(n) => f.write_str(n)?,
            BoolExpr::Event(l) => write!(f, "{l}")?,
            BoolExpr::Not(e) => {
                f.write_str("!")?;
                e.fmt_prec(f, 4)?;
            }
            BoolExpr::And(v) | BoolExpr::Or(v) if v.is_empty() => {
                f.write_str(if matches!(self, BoolExpr::And(_)) { "true" } else { "false" })?
            }
            BoolExpr::And(v) | BoolExpr::Or(v) if v.len() == 1 => {
                // a one-element conjunction prints as its operand wrapped in
                // parentheses so that parsing gives back the same shape
                f.write_str(if matches!(self, BoolExpr::And(_)) { "and(" } else { "or(" })?;
                v[0].fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            BoolExpr::And(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    e.fmt_prec(f, 4)?;
                }
            }
            BoolExpr::Or(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    e.fmt_prec(f, 3)?;
                }
            }
            BoolExpr::Implies(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 1)?;
            }
        }
        if p < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// The supported safety fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SafetyFormula {
    /// `[](b)`
    Always(BoolExpr),
    /// `hold W release` anchored at the first position
    WeakUntil(BoolExpr, BoolExpr),
    /// `[](trigger -> (hold W release))`
    AlwaysImplWeakUntil { trigger: BoolExpr, hold: BoolExpr, release: BoolExpr },
    Conj(Vec<SafetyFormula>),
}

impl SafetyFormula {
    pub fn always_true() -> SafetyFormula {
        SafetyFormula::Always(BoolExpr::Const(true))
    }

    pub fn and(parts: impl IntoIterator<Item = SafetyFormula>) -> SafetyFormula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                SafetyFormula::Conj(v) => flat.extend(v),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            SafetyFormula::Conj(flat)
        }
    }

    pub fn exprs(&self) -> Vec<&BoolExpr> {
        match self {
            SafetyFormula::Always(b) => vec![b],
            SafetyFormula::WeakUntil(a, b) => vec![a, b],
            SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release } => vec![trigger, hold, release],
            SafetyFormula::Conj(v) => v.iter().flat_map(|x| x.exprs()).collect(),
        }
    }

    pub fn fluents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.exprs() {
            e.fluents(&mut out);
        }
        out
    }

    pub fn events(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for e in self.exprs() {
            e.events(&mut out);
        }
        out
    }

    /// Conjunct count after flattening.
    pub fn clauses(&self) -> usize {
        match self {
            SafetyFormula::Conj(v) => v.iter().map(|x| x.clauses()).sum(),
            _ => 1,
        }
    }
}

impl fmt::Display for SafetyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyFormula::Always(b) => write!(f, "[]({b})"),
            SafetyFormula::WeakUntil(a, b) => {
                write!(f, "(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ") W (")?;
                b.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release } => {
                write!(f, "[](")?;
                trigger.fmt_prec(f, 2)?;
                write!(f, " -> (({hold}) W ({release})))")
            }
            SafetyFormula::Conj(v) if v.is_empty() => write!(f, "[](true)"),
            SafetyFormula::Conj(v) if v.len() == 1 => write!(f, "and({})", v[0]),
            SafetyFormula::Conj(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    match x {
                        SafetyFormula::Conj(_) | SafetyFormula::WeakUntil(..) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// `/\ []<>A_i -> /\ []<>G_j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Gr1Liveness {
    pub assumptions: Vec<BoolExpr>,
    pub guarantees: Vec<BoolExpr>,
}

impl Gr1Liveness {
    pub fn fluents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.assumptions.iter().chain(&self.guarantees) {
            e.fluents(&mut out);
        }
        out
    }
}

impl fmt::Display for Gr1Liveness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[BoolExpr]| v.iter().map(|e| format!("[]<>({e})")).collect::<Vec<_>>().join(", ");
        write!(f, "gr1({} |- {})", list(&self.assumptions), list(&self.guarantees))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_respects_precedence() {
        let e = BoolExpr::implies(
            BoolExpr::And(vec![BoolExpr::fluent("with1"), BoolExpr::fluent("at3")]),
            BoolExpr::Or(vec![BoolExpr::fluent("a"), BoolExpr::not(BoolExpr::fluent("b"))]),
        );
        assert_eq!(e.to_string(), "with1 && at3 -> a || !b");
        let n = BoolExpr::not(BoolExpr::Or(vec![BoolExpr::fluent("a"), BoolExpr::fluent("b")]));
        assert_eq!(n.to_string(), "!(a || b)");
        let nested = BoolExpr::implies(BoolExpr::implies(BoolExpr::fluent("a"), BoolExpr::fluent("b")), BoolExpr::fluent("c"));
        assert_eq!(nested.to_string(), "(a -> b) -> c");
    }

    #[test]
    fn conj_flattens() {
        let f = SafetyFormula::and([
            SafetyFormula::Conj(vec![SafetyFormula::always_true(), SafetyFormula::always_true()]),
            SafetyFormula::always_true(),
        ]);
        assert_eq!(f.clauses(), 3);
    }
}
