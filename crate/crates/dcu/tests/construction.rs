use skyweave_dcu::{build_update_environment, solve_update, verify_update, UpdateProblem};
use skyweave_lang::{load, Context};
use skyweave_lts::{Lts, StateId};
use skyweave_synthesis::{synthesize, ControlProblem};

const TOY: &str = "
Move = moves({0-1, 1-2}, 0).
Move2 = moves({0-1, 1-2}, 0).
||Env = (Move).
||Env2 = (Move2).
controllable = {go[i:0..2]}.
set Go = {go[i:0..2]}.
fluent at0 = <{at.0}, Go, init true>.
fluent at2 = <{at.2}, Go>.
liveness Old = gr1( |- []<>(at0), []<>(at2)).
liveness New = gr1( |- []<>(at2)).
problem control A { env = Env; liveness = Old; }
problem control B { env = Env2; liveness = New; }
problem update U { old = A; new = B; map Move -> Move2 {c0 -> c0, c1 -> c1, c2 -> c2} except {m0, m1, m2}; }
";

fn toy() -> (UpdateProblem, Lts) {
    let (_, m) = load(TOY, &Context::default()).unwrap();
    let up = UpdateProblem::from_model(&m, "U").unwrap();
    let c = synthesize(&ControlProblem::from_model(&m, "A").unwrap()).unwrap().controller.unwrap().lts;
    (up, c)
}

fn count_traces(l: &Lts, s: StateId, depth: usize, counts: &mut [usize; 4], check: &mut dyn FnMut(&[usize; 4], bool)) {
    let names = ["hotSwap", "stopOld", "startNew", "reconfig"];
    check(counts, l.out(s).iter().any(|&(li, _)| l.label(li).as_str() == "hotSwap"));
    if depth == 0 {
        return;
    }
    for &(li, t) in l.out(s) {
        let k = names.iter().position(|n| *n == l.label(li).as_str());
        if let Some(k) = k {
            counts[k] += 1;
        }
        count_traces(l, t, depth - 1, counts, check);
        if let Some(k) = k {
            counts[k] -= 1;
        }
    }
}

#[test]
fn update_events_occur_at_most_once_and_swap_is_always_possible_before() {
    let (up, c) = toy();
    let env = build_update_environment(&up, &c).unwrap();
    let mut traces = 0;
    count_traces(&env.lts, env.lts.initial(), 8, &mut [0; 4], &mut |counts, swap_enabled| {
        traces += 1;
        assert!(counts.iter().all(|&n| n <= 1), "{counts:?}");
        // hotSwap is enabled exactly while it has not happened
        assert_eq!(swap_enabled, counts[0] == 0);
        // nothing of the update happens before the swap
        if counts[0] == 0 {
            assert_eq!(counts[1..], [0, 0, 0]);
        }
    });
    assert!(traces > 100);
}

#[test]
fn pre_swap_part_is_the_running_system() {
    let (up, c) = toy();
    let env = build_update_environment(&up, &c).unwrap();
    for p in 0..env.pre.num_states() as StateId {
        let cs = env.controller_state(p).unwrap();
        for &(li, _) in env.pre.out(p) {
            assert!(c.is_enabled(cs, env.pre.label(li).as_str()));
        }
    }
}

#[test]
fn toy_update_verifies() {
    let (up, c) = toy();
    let sol = solve_update(&up, &c).unwrap();
    let (_, v) = verify_update(&sol).unwrap();
    assert!(v.ok(), "{v:?}");
    for s in 0..c.num_states() as StateId {
        assert!(sol.f.get_single(s).is_some());
    }
}

/// A replacement that never reconfigures leaves the swap unfinished.
#[test]
fn controller_without_reconfig_is_rejected() {
    let (up, c) = toy();
    let mut sol = solve_update(&up, &c).unwrap();
    let l = &sol.new_lts;
    let adj = (0..l.num_states() as StateId)
        .map(|s| l.out(s).iter().copied().filter(|&(li, _)| l.label(li).as_str() != "reconfig").collect())
        .collect();
    sol.new_lts = Lts::from_adjacency(l.alphabet().to_vec(), l.initial(), adj);
    sol.combined = skyweave_lts::interrupt(&c, &sol.new_lts, &skyweave_dcu::label("hotSwap"), &sol.f).unwrap();
    let (_, v) = verify_update(&sol).unwrap();
    assert!(!v.ok());
}
