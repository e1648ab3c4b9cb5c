//! Checks on the example specs, shared with the acceptance suite.

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use skyweave_dcu::{solve_update, verify_update, verify_update_watching, DcuError, UpdateProblem};
use skyweave_lang::{load, Context, Model};
use skyweave_synthesis::{synthesize, ClosedLoop, ControlProblem};

pub fn model(file: &str) -> Model {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(file);
    load(&std::fs::read_to_string(p).unwrap(), &Context::default()).unwrap().1
}

pub fn setup(file: &str, update: &str) -> (UpdateProblem, skyweave_lts::Lts) {
    let m = model(file);
    let up = UpdateProblem::from_model(&m, update).unwrap();
    let old = ControlProblem::from_model(&m, &m.update_problem(update).unwrap().old).unwrap();
    let c = synthesize(&old).unwrap().controller.unwrap().lts;
    (up, c)
}

pub fn label_id(cl: &ClosedLoop, l: &str) -> Option<u32> {
    cl.labels.iter().position(|x| x.as_str() == l).map(|i| i as u32)
}

/// Naive has no solution; ViaBottom keeps the vehicle in the bottom row
/// between the two missions. Returns the number of in-between states.
pub fn inconsistent_patrol_needs_a_transition_requirement() -> usize {
    let (up, c) = setup("inconsistent.fsl", "Naive");
    assert!(matches!(solve_update(&up, &c), Err(DcuError::Unrealizable)));

    let (up, c) = setup("inconsistent.fsl", "ViaBottom");
    let sol = solve_update(&up, &c).unwrap();
    let (cl, v) = verify_update(&sol).unwrap();
    assert!(v.ok(), "{v:?}");
    let mut between = 0;
    for s in 0..cl.num_states() as u32 {
        if cl.fluent(s, "OldStopped") == Some(true) && cl.fluent(s, "NewStarted") == Some(false) {
            between += 1;
            assert!(cl.fluent(s, "at4") == Some(true) || cl.fluent(s, "at5") == Some(true), "{:?}", cl.trace_to(s));
        }
    }
    assert!(between > 0);
    between
}

/// The state map covers every reachable state of the running controller.
/// Returns how many there are.
pub fn delivery_reroute_is_total_and_verified() -> usize {
    let (up, c) = setup("delivery.fsl", "Reroute");
    let sol = solve_update(&up, &c).unwrap();
    let reach = c.reachable_set();
    let mut total = 0;
    for s in 0..c.num_states() as u32 {
        if reach[s as usize] {
            assert!(sol.f.get_single(s).is_some(), "f undefined at {s}");
            total += 1;
        }
    }
    let (_, v) = verify_update(&sol).unwrap();
    assert!(v.ok(), "{v:?}");
    total
}

/// From every post-swap state en route to C with p1 and p3 on board, no path
/// performs `startNew` while both are still on board. Returns the number
/// of such states.
pub fn capped_delivery_delays_the_new_mission() -> usize {
    let (up, c) = setup("delivery.fsl", "RerouteCapped");
    let sol = solve_update(&up, &c).unwrap();
    let (cl, v) = verify_update_watching(&sol, &["with1", "with3", "Moving"]).unwrap();
    assert!(v.ok(), "{v:?}");
    let hot = label_id(&cl, "hotSwap").unwrap();
    let start = label_id(&cl, "startNew").unwrap();
    let (r1, r3) = (label_id(&cl, "release.1").unwrap(), label_id(&cl, "release.3").unwrap());
    let mut roots = Vec::new();
    for s in 0..cl.num_states() as u32 {
        for &(l, t) in &cl.edges[s as usize] {
            let loaded = cl.fluent(t, "with1") == Some(true) && cl.fluent(t, "with3") == Some(true);
            let last_go = cl.trace_to(t).iter().rev().find(|x| x.as_str().starts_with("go.")).cloned();
            if l == hot && loaded && cl.fluent(t, "Moving") == Some(true) && last_go.as_ref().map(|g| g.as_str()) == Some("go.3") {
                roots.push(t);
            }
        }
    }
    assert!(!roots.is_empty());
    let mut seen = HashSet::new();
    let mut queue: VecDeque<(u32, bool, bool)> = roots.iter().map(|&s| (s, false, false)).collect();
    while let Some((s, a, b)) = queue.pop_front() {
        if !seen.insert((s, a, b)) {
            continue;
        }
        for &(l, t) in &cl.edges[s as usize] {
            assert!(l != start || a || b, "startNew with both packages pending: {:?}", cl.trace_to(s));
            queue.push_back((t, a || l == r1, b || l == r3));
        }
    }
    roots.len()
}

/// `reconfig` only at cells 2 and 5, `grab.4` only after it. Returns the
/// number of `reconfig` edges.
pub fn reconfiguration_happens_at_shared_cells() -> usize {
    let (up, c) = setup("reconf.fsl", "Extend");
    let sol = solve_update(&up, &c).unwrap();
    let (cl, v) = verify_update_watching(&sol, &["at2", "at5"]).unwrap();
    assert!(v.ok(), "{v:?}");
    let rc = label_id(&cl, "reconfig").unwrap();
    let g4 = label_id(&cl, "grab.4").unwrap();
    let mut count = 0;
    for s in 0..cl.num_states() as u32 {
        for &(l, _) in &cl.edges[s as usize] {
            if l == rc {
                count += 1;
                assert!(cl.fluent(s, "at2") == Some(true) || cl.fluent(s, "at5") == Some(true), "{:?}", cl.trace_to(s));
            }
            if l == g4 {
                assert_eq!(cl.fluent(s, "Reconfigured"), Some(true));
            }
        }
    }
    assert!(count > 0);
    count
}
