use proptest::prelude::*;
use skyweave_fltl::{BoolExpr, Gr1Liveness, SafetyFormula};
use skyweave_lang::ast::*;
use skyweave_lang::{emit, parse};
use skyweave_lts::Label;

const FLUENTS: [&str; 4] = ["F0", "F1", "busy", "at3"];
const EVENTS: [&str; 5] = ["go.1", "at.3", "grab.2", "e", "land.end"];

fn label() -> impl Strategy<Value = LabelRef> {
    prop::sample::select(&EVENTS[..]).prop_map(LabelRef::new)
}

fn labels() -> impl Strategy<Value = Vec<LabelRef>> {
    prop::collection::vec(label(), 1..4)
}

fn set_expr() -> impl Strategy<Value = SetExpr> {
    let leaf = prop_oneof![
        labels().prop_map(SetExpr::Lit),
        Just(SetExpr::Ref(Name::new("S0"))),
        Just(SetExpr::Sigma(Span::default())),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::Union(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| SetExpr::Diff(Box::new(a), Box::new(b))),
        ]
    })
}

fn atom() -> impl Strategy<Value = BoolExpr> {
    prop_oneof![
        prop::sample::select(&FLUENTS[..]).prop_map(BoolExpr::fluent),
        prop::sample::select(&EVENTS[..]).prop_map(|e| BoolExpr::Event(Label::from_static(e))),
        any::<bool>().prop_map(BoolExpr::Const),
    ]
}

fn expr() -> impl Strategy<Value = BoolExpr> {
    atom().prop_recursive(4, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::not),
            prop::collection::vec(inner.clone(), 1..4).prop_map(BoolExpr::And),
            prop::collection::vec(inner.clone(), 1..4).prop_map(BoolExpr::Or),
            (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::implies(a, b)),
        ]
    })
}

fn simple_safety() -> impl Strategy<Value = SafetyFormula> {
    prop_oneof![
        expr().prop_map(SafetyFormula::Always),
        (expr(), expr()).prop_map(|(a, b)| SafetyFormula::WeakUntil(a, b)),
        (expr(), expr(), expr()).prop_map(|(trigger, hold, release)| SafetyFormula::AlwaysImplWeakUntil { trigger, hold, release }),
    ]
}

fn safety() -> impl Strategy<Value = SafetyFormula> {
    prop_oneof![
        3 => simple_safety(),
        1 => prop::collection::vec(simple_safety(), 2..4).prop_map(SafetyFormula::Conj),
    ]
}

fn liveness() -> impl Strategy<Value = Gr1Liveness> {
    (prop::collection::vec(expr(), 0..3), prop::collection::vec(expr(), 1..3))
        .prop_map(|(assumptions, guarantees)| Gr1Liveness { assumptions, guarantees })
}

fn process() -> impl Strategy<Value = ProcessBody> {
    let branch = (labels(), prop_oneof![Just(Target::Stop), (0..3usize).prop_map(|i| Target::Local(Name::new(local(i))))])
        .prop_map(|(actions, target)| Branch { actions, target });
    let def = prop::collection::vec(branch, 0..3);
    prop_oneof![
        prop::collection::vec(def, 1..4).prop_map(|defs| {
            let n = defs.len();
            ProcessBody::Equations(
                defs.into_iter()
                    .enumerate()
                    .map(|(i, mut branches)| {
                        for b in &mut branches {
                            if let Target::Local(t) = &b.target {
                                if t.text.trim_start_matches('L').parse::<usize>().unwrap() >= n {
                                    b.target = Target::Stop;
                                }
                            }
                        }
                        LocalDef { name: Name::new(local(i)), branches }
                    })
                    .collect(),
            )
        }),
        (1..5u32, 1..5u32, prop::collection::vec(0..20u32, 0..3))
            .prop_map(|(rows, cols, blocked)| ProcessBody::Grid { rows, cols, init: 0, blocked }),
        (prop::collection::vec((0..9u32, 0..9u32), 1..5), 0..9u32).prop_map(|(edges, init)| ProcessBody::Moves { edges, init }),
        state_pairs().prop_map(|map| ProcessBody::Interrupt {
            first: Name::new("P0"),
            second: Name::new("P1"),
            label: LabelRef::new("hotSwap"),
            map,
        }),
    ]
}

fn local(i: usize) -> String {
    format!("L{i}")
}

fn state_pairs() -> impl Strategy<Value = Vec<(StateRef, StateRef)>> {
    let s = prop_oneof![
        (0..50u32).prop_map(StateRef::Index),
        prop::sample::select(vec!["c2", "m5", "(c0,P)", "x'"]).prop_map(|n| StateRef::Name(n.to_string())),
    ];
    prop::collection::vec((s.clone(), s), 0..4)
}

fn item(k: usize) -> BoxedStrategy<Item> {
    let n = move |p: &str| Name::new(format!("{p}{k}"));
    match k % 9 {
        0 => set_expr().prop_map(move |value| Item::Set { name: n("S"), value }).boxed(),
        1 => (process(), prop::option::of(set_expr()))
            .prop_map(move |(mut body, extra)| {
                // the first equation is named after the process
                let name = n("P");
                if let ProcessBody::Equations(defs) = &mut body {
                    defs[0].name = name.clone();
                    for b in defs.iter_mut().flat_map(|d| d.branches.iter_mut()) {
                        if matches!(&b.target, Target::Local(t) if t.text == "L0") {
                            b.target = Target::Local(name.clone());
                        }
                    }
                }
                Item::Process { name, body, extra }
            })
            .boxed(),
        2 => Just(Item::Composition { name: n("C"), parts: vec![Name::new("P0"), Name::new("P1")] }).boxed(),
        3 => prop_oneof![
            set_expr().prop_map(|set| Item::Controllable { set, span: Span::default() }),
            set_expr().prop_map(|set| Item::Uncontrollable { set, span: Span::default() }),
        ]
        .boxed(),
        4 => (set_expr(), set_expr(), any::<bool>())
            .prop_map(move |(initiating, terminating, initial)| Item::Fluent {
                name: Name::new(FLUENTS[k % FLUENTS.len()]),
                initiating,
                terminating,
                initial,
            })
            .boxed(),
        5 => safety().prop_map(move |formula| Item::Safety { name: n("A"), formula }).boxed(),
        6 => liveness().prop_map(move |formula| Item::Liveness { name: n("G"), formula }).boxed(),
        7 => (prop::collection::vec(Just(Name::new("A0")), 0..3), any::<bool>())
            .prop_map(move |(safety, live)| Item::ControlProblem {
                name: n("Q"),
                env: Name::new("C0"),
                safety,
                liveness: live.then(|| Name::new("G0")),
            })
            .boxed(),
        _ => (state_pairs(), prop::collection::vec(state_pairs().prop_map(|v| v.into_iter().map(|(a, _)| a).collect::<Vec<_>>()), 0..2))
            .prop_map(move |(pairs, excepts)| Item::UpdateProblem {
                name: n("U"),
                old: Name::new("Q0"),
                new: Name::new("Q1"),
                maps: excepts
                    .into_iter()
                    .map(|except| MapBlock {
                        from: Name::new("P0"),
                        to: Name::new("P1"),
                        pairs: pairs.clone(),
                        except,
                        span: Span::default(),
                    })
                    .collect(),
                theta: vec![Name::new("A0")],
            })
            .boxed(),
    }
}

fn document() -> impl Strategy<Value = SpecDocument> {
    prop::collection::vec(0..40usize, 1..8)
        .prop_flat_map(|ks| ks.into_iter().map(item).collect::<Vec<_>>())
        .prop_map(|items| {
            // atoms are sorted into fluents and events by the declared fluents
            let decls = FLUENTS.iter().map(|f| Item::Fluent {
                name: Name::new(*f),
                initiating: SetExpr::Lit(vec![LabelRef::new("e")]),
                terminating: SetExpr::Sigma(Span::default()),
                initial: false,
            });
            SpecDocument { items: decls.chain(items).collect() }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn emit_then_parse_is_identity(doc in document()) {
        let text = emit(&doc);
        let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        prop_assert_eq!(back, doc, "{}", text);
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let _ = parse(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn parser_never_panics_on_near_miss_text(doc in document(), cut in 0usize..2000, junk in "[(){}<>|&!\\[\\].,;:=\\-a-z0-9 ]{0,8}") {
        let mut text = emit(&doc);
        let at = text.char_indices().map(|(i, _)| i).nth(cut % text.chars().count().max(1)).unwrap_or(0);
        text.insert_str(at, &junk);
        let _ = parse(&text);
    }
}

#[test]
fn deep_nesting_is_a_diagnostic() {
    let src = format!("assert safety A = []({}x{}).", "(".repeat(5000), ")".repeat(5000));
    assert!(parse(&src).is_err());
}
