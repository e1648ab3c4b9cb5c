use std::collections::BTreeSet;

use proptest::prelude::*;
use skyweave_fltl::*;
use skyweave_lts::Label;

fn l(s: &str) -> Label {
    Label::from_static(s)
}

fn labels(t: &[&str]) -> Vec<Label> {
    t.iter().map(|x| l(x)).collect()
}

fn f(n: &str) -> BoolExpr {
    BoolExpr::fluent(n)
}

/// Straight from the finite-trace definitions, one position at a time.
fn oracle(formula: &SafetyFormula, trace: &[Label], defs: &[FluentDef]) -> TraceVerdict {
    let mut vals = Vec::new();
    let mut v = initial_valuation(defs).unwrap();
    for e in trace {
        v = advance(&v, e, defs);
        vals.push(v.clone());
    }
    let holds = |b: &BoolExpr, k: usize| b.eval(&|n: &str| vals[k][n], Some(&trace[k]));
    let mut clauses = Vec::new();
    fn flat<'a>(x: &'a SafetyFormula, out: &mut Vec<&'a SafetyFormula>) {
        match x {
            SafetyFormula::Conj(v) => v.iter().for_each(|y| flat(y, out)),
            other => out.push(other),
        }
    }
    flat(formula, &mut clauses);
    for k in 0..trace.len() {
        for c in &clauses {
            let bad = match c {
                SafetyFormula::Always(b) => !holds(b, k),
                SafetyFormula::WeakUntil(h, r) => !holds(h, k) && (0..=k).all(|j| !holds(r, j)),
                SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release } => {
                    !holds(hold, k) && (0..=k).any(|t| holds(trigger, t) && (t..=k).all(|j| !holds(release, j)))
                }
                SafetyFormula::Conj(_) => unreachable!(),
            };
            if bad {
                return TraceVerdict::Violated { at: k };
            }
        }
    }
    TraceVerdict::Ok
}

fn monitor_verdict(m: &Monitor, trace: &[Label]) -> TraceVerdict {
    let mut s = m.lts.initial();
    for (i, e) in trace.iter().enumerate() {
        let li = m.lts.label_index(e.as_str()).unwrap();
        s = m.lts.out(s).iter().find(|(x, _)| *x == li).unwrap().1;
        if s == m.error {
            return TraceVerdict::Violated { at: i };
        }
    }
    TraceVerdict::Ok
}

fn at_fluents(n: usize, start: usize) -> Vec<FluentDef> {
    (0..n)
        .map(|i| {
            let others: Vec<Label> = (0..n).filter(|&j| j != i).map(|j| l(&format!("at.{j}"))).collect();
            FluentDef::new(format!("at{i}"), [l(&format!("at.{i}"))], others, i == start).unwrap()
        })
        .collect()
}

fn update_fluents() -> Vec<FluentDef> {
    vec![FluentDef::latch("OldStopped", l("stopOld")), FluentDef::latch("NewStarted", l("startNew"))]
}

fn theta_empty() -> SafetyFormula {
    SafetyFormula::Always(BoolExpr::Or(vec![BoolExpr::not(f("OldStopped")), f("NewStarted")]))
}

fn theta_patrol() -> SafetyFormula {
    SafetyFormula::AlwaysImplWeakUntil {
        trigger: f("OldStopped"),
        hold: BoolExpr::Or(vec![f("at4"), f("at5")]),
        release: f("NewStarted"),
    }
}

#[test]
fn always_true_is_one_state() {
    let m = compile_safety(&SafetyFormula::always_true(), &[], labels(&["a", "b"])).unwrap();
    assert_eq!(m.lts.num_states(), 2);
    assert!(m.lts.out(0).iter().all(|&(_, t)| t == 0));
}

#[test]
fn empty_transition_requirement() {
    let defs = update_fluents();
    let th = theta_empty();
    assert_eq!(check_trace(&th, &labels(&["stopOld"]), &defs).unwrap(), TraceVerdict::Violated { at: 0 });
    assert_eq!(check_trace(&th, &labels(&["startNew", "stopOld"]), &defs).unwrap(), TraceVerdict::Ok);
}

#[test]
fn patrol_transition_requirement() {
    let mut defs = update_fluents();
    defs.extend(at_fluents(6, 4));
    let th = theta_patrol();
    assert_eq!(
        check_trace(&th, &labels(&["stopOld", "at.4", "at.3"]), &defs).unwrap(),
        TraceVerdict::Violated { at: 2 }
    );
    assert_eq!(check_trace(&th, &labels(&["stopOld", "at.4", "at.5", "startNew", "at.3"]), &defs).unwrap(), TraceVerdict::Ok);
}

fn all_traces(alpha: &[Label], max: usize) -> Vec<Vec<Label>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for t in &frontier {
            for a in alpha {
                let mut u: Vec<Label> = t.clone();
                u.push(a.clone());
                next.push(u);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn patrol_requirement_matches_oracle_exhaustively() {
    let alpha = labels(&["stopOld", "startNew", "at.3", "at.4", "at.5", "at.0"]);
    let mut defs = update_fluents();
    defs.extend(at_fluents(6, 4));
    let th = theta_patrol();
    let m = compile_safety(&th, &defs, alpha.clone()).unwrap();
    for t in all_traces(&alpha, 6) {
        let want = oracle(&th, &t, &defs);
        assert_eq!(monitor_verdict(&m, &t), want, "{t:?}");
        assert_eq!(check_trace(&th, &t, &defs).unwrap(), want);
    }
}

fn delivery_defs() -> Vec<FluentDef> {
    let mut defs: Vec<FluentDef> = (1..=3)
        .map(|i| FluentDef::new(format!("with{i}"), [l(&format!("grab.{i}"))], [l(&format!("release.{i}"))], false).unwrap())
        .collect();
    let go: Vec<Label> = (0..12).map(|k| l(&format!("go.{k}"))).collect();
    let at: Vec<Label> = (0..12).map(|k| l(&format!("at.{k}"))).collect();
    defs.push(FluentDef::new("Moving", go, at, false).unwrap());
    defs
}

fn gamma() -> SafetyFormula {
    SafetyFormula::Always(BoolExpr::implies(
        f("Moving"),
        BoolExpr::Or(vec![f("with1"), f("with2"), f("with3")]),
    ))
}

#[test]
fn empty_trips_are_caught() {
    let defs = delivery_defs();
    assert_eq!(check_trace(&gamma(), &labels(&["grab.1", "go.8", "at.8"]), &defs).unwrap(), TraceVerdict::Ok);
    assert_eq!(check_trace(&gamma(), &labels(&["go.8"]), &defs).unwrap(), TraceVerdict::Violated { at: 0 });
}

#[test]
fn shorthand_event_fluent_starts_false() {
    let mut b = ObserverBuilder::new(labels(&["a"]), &[]).unwrap();
    let e = b.add_expr(&BoolExpr::event("a")).unwrap();
    let o = b.build();
    assert!(!o.eval(e, &o.initial()));
}

#[test]
fn unknown_fluent_is_reported() {
    let err = compile_safety(&SafetyFormula::Always(f("nope")), &[], labels(&["a"])).unwrap_err();
    assert_eq!(err, FltlError::UnknownFluent("nope".into()));
}

const EVENTS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn arb_def(name: String) -> impl Strategy<Value = FluentDef> {
    (proptest::collection::vec(0u8..3, 6), any::<bool>()).prop_map(move |(roles, init)| {
        let mut on = BTreeSet::new();
        let mut off = BTreeSet::new();
        for (i, r) in roles.iter().enumerate() {
            match r {
                1 => {
                    on.insert(l(EVENTS[i]));
                }
                2 => {
                    off.insert(l(EVENTS[i]));
                }
                _ => {}
            }
        }
        FluentDef::new(name.clone(), on, off, init).unwrap()
    })
}

fn arb_defs() -> impl Strategy<Value = Vec<FluentDef>> {
    (arb_def("F0".into()), arb_def("F1".into()), arb_def("F2".into()), arb_def("F3".into()), arb_def("F4".into()))
        .prop_map(|(a, b, c, d, e)| vec![a, b, c, d, e])
}

fn arb_expr() -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        (0usize..5).prop_map(|i| BoolExpr::fluent(&format!("F{i}"))),
        (0usize..6).prop_map(|i| BoolExpr::event(EVENTS[i])),
        any::<bool>().prop_map(BoolExpr::Const),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::not),
            proptest::collection::vec(inner.clone(), 1..3).prop_map(BoolExpr::And),
            proptest::collection::vec(inner.clone(), 1..3).prop_map(BoolExpr::Or),
            (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::implies(a, b)),
        ]
    })
}

fn arb_clause() -> impl Strategy<Value = SafetyFormula> {
    prop_oneof![
        arb_expr().prop_map(SafetyFormula::Always),
        (arb_expr(), arb_expr()).prop_map(|(h, r)| SafetyFormula::WeakUntil(h, r)),
        (arb_expr(), arb_expr(), arb_expr())
            .prop_map(|(t, h, r)| SafetyFormula::AlwaysImplWeakUntil { trigger: t, hold: h, release: r }),
    ]
}

fn arb_formula() -> impl Strategy<Value = SafetyFormula> {
    proptest::collection::vec(arb_clause(), 1..4).prop_map(SafetyFormula::and)
}

fn arb_trace(max: usize) -> impl Strategy<Value = Vec<Label>> {
    proptest::collection::vec((0usize..6).prop_map(|i| l(EVENTS[i])), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn monitor_agrees_with_evaluator(defs in arb_defs(), formula in arb_formula(), trace in arb_trace(30)) {
        let m = compile_safety(&formula, &defs, EVENTS.iter().map(|e| l(e))).unwrap();
        let want = oracle(&formula, &trace, &defs);
        prop_assert_eq!(monitor_verdict(&m, &trace), want.clone());
        prop_assert_eq!(check_trace(&formula, &trace, &defs).unwrap(), want);
    }

    #[test]
    fn monitor_is_complete_and_small(defs in arb_defs(), formula in arb_formula()) {
        let m = compile_safety(&formula, &defs, EVENTS.iter().map(|e| l(e))).unwrap();
        prop_assert!(m.lts.is_deterministic());
        for s in 0..m.lts.num_states() as u32 {
            prop_assert_eq!(m.lts.out(s).len(), EVENTS.len());
        }
        for &(_, t) in m.lts.out(m.error) {
            prop_assert_eq!(t, m.error);
        }
        let fluents = formula.fluents().len() + formula.events().len();
        let pending = match &formula {
            SafetyFormula::Conj(v) => v.iter().filter(|c| !matches!(c, SafetyFormula::Always(_))).count(),
            SafetyFormula::Always(_) => 0,
            _ => 1,
        };
        prop_assert!(m.lts.num_states() <= (1usize << (fluents + pending)) + 1);
    }

    #[test]
    fn advance_matches_recomputation(defs in arb_defs(), trace in arb_trace(30)) {
        let mut v = initial_valuation(&defs).unwrap();
        for e in &trace {
            v = advance(&v, e, &defs);
        }
        for d in &defs {
            let last = trace.iter().rposition(|e| d.initiating.contains(e) || d.terminating.contains(e));
            let want = match last {
                Some(k) => d.initiating.contains(&trace[k]),
                None => d.initial,
            };
            prop_assert_eq!(v[&d.name], want);
        }
    }

    #[test]
    fn advance_folds_over_concatenation(defs in arb_defs(), a in arb_trace(10), b in arb_trace(10)) {
        let fold = |start: Valuation, t: &[Label]| t.iter().fold(start, |v, e| advance(&v, e, &defs));
        let init = initial_valuation(&defs).unwrap();
        let whole: Vec<Label> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(fold(init.clone(), &whole), fold(fold(init, &a), &b));
    }
}
