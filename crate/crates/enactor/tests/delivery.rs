mod common;

use std::collections::VecDeque;

use common::{fixture, EnvSim};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyweave_enactor::{Dir, EnactError, Enactable, Enactor, FallbackPlan, Swap};
use skyweave_lts::{Label, StateId};

#[test]
fn first_commands_follow_the_old_plan() {
    let f = fixture("delivery.fsl", "Reroute");
    let mut e = Enactor::new(Enactable::from_controller(&f.c), FallbackPlan::return_and_land(4));
    assert_eq!(e.tick(), vec![Label::from_static("grab.1")]);
    let go = e.tick();
    assert_eq!(go.len(), 1);
    let at = Label::new(&go[0].as_str().replace("go.", "at.")).unwrap();
    e.push(at);
    let next = e.tick();
    assert!(next[0].as_str().starts_with("go."), "{next:?}");
}

/// Drives the enactor along a shortest path of `C || E` to every reachable
/// state of `C`, swaps there, and checks the resumed run against `E_u`.
#[test]
fn swap_succeeds_from_every_reachable_state() {
    let f = fixture("delivery.fsl", "Reroute");
    let pre = &f.sol.env.pre;
    let lts = &f.sol.env.lts;
    // BFS tree over C || E
    let mut parent: Vec<Option<(StateId, u32)>> = vec![None; pre.num_states()];
    let mut seen = vec![false; pre.num_states()];
    seen[pre.initial() as usize] = true;
    let mut queue = VecDeque::from([pre.initial()]);
    while let Some(s) = queue.pop_front() {
        for &(l, t) in pre.out(s) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, l));
                queue.push_back(t);
            }
        }
    }
    let mut covered = std::collections::BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for target in 0..pre.num_states() as StateId {
        let cs = f.sol.env.controller_state(target).unwrap();
        if !covered.insert(cs) {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = target;
        while let Some((p, l)) = parent[cur as usize] {
            path.push(pre.label(l).clone());
            cur = p;
        }
        path.reverse();
        let mut e = Enactor::new(Enactable::from_controller(&f.c), FallbackPlan::return_and_land(4));
        let controlled = |l: &Label| f.sol.problem.is_controlled(l);
        let mut env = EnvSim { lts, state: lts.initial(), controlled: Box::new(controlled) };
        for l in &path {
            if controlled(l) {
                assert_eq!(e.tick(), vec![l.clone()]);
            } else {
                e.push(l.clone());
                e.drain();
            }
            env.follow(l);
        }
        assert_eq!(e.state(), cs);
        e.hotswap(Swap::from_update(&f.sol, vec![])).unwrap();
        env.follow(&Label::from_static("hotSwap"));
        // the resumed run stays inside E_u and never falls back
        for _ in 0..80 {
            for c in e.tick() {
                env.follow(&c);
            }
            if rng.random_bool(0.5) {
                if let Some(ev) = env.pick(&mut rng) {
                    e.push(ev);
                }
            }
        }
        assert!(e.log().iter().all(|r| r.dir != Dir::Fallback), "{:?}", e.log());
        assert!(e.log().iter().any(|r| r.label == "startNew"));
    }
    assert_eq!(covered.len(), f.c.lts.reachable_set().iter().filter(|&&r| r).count());
}

#[test]
fn swapping_with_a_foreign_map_is_stale() {
    let f = fixture("delivery.fsl", "Reroute");
    let mut e = Enactor::new(Enactable::from_controller(&f.c), FallbackPlan::return_and_land(4));
    let mut s = Swap::from_update(&f.sol, vec![]);
    s.f = skyweave_lts::StateMap::new();
    assert_eq!(e.hotswap(s), Err(EnactError::StaleSolution(e.state())));
}
