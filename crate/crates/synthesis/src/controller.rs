//! Strategy extraction. Controller states are `(belief, j)` where the belief
//! is the set of arena states consistent with the events seen so far and `j`
//! is the guarantee currently pursued.

use std::collections::{BTreeSet, HashMap, VecDeque};

use skyweave_lts::{Label, Lts, StateId};

use crate::arena::{Arena, ERROR};
use crate::solver::{Solution, UNRANKED};
use crate::SynthError;

/// Controller states beyond this count are refused.
pub const MAX_CONTROLLER_STATES: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct Controller {
    pub lts: Lts,
    /// Arena states each controller state may stand for.
    pub belief: Vec<Vec<u32>>,
    /// Guarantee index pursued in each controller state.
    pub memory: Vec<u32>,
    /// Controlled event issued in each state, if any.
    pub choice: Vec<Option<Label>>,
}

impl Controller {
    pub fn num_states(&self) -> usize {
        self.lts.num_states()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Opt {
    Act(u32),
    Wait,
}

/// Builds the controller for a winning initial state.
pub fn extract(arena: &Arena, sol: &Solution) -> Result<Controller, SynthError> {
    extract_from(arena, sol, &[vec![arena.initial()]]).map(|(c, _)| c)
}

/// Builds a controller whose entry points are the given beliefs, returning
/// the controller state of each root. The first root is the initial state.
pub fn extract_from(arena: &Arena, sol: &Solution, roots: &[Vec<u32>]) -> Result<(Controller, Vec<StateId>), SynthError> {
    assert!(!roots.is_empty(), "at least one root");
    if roots.iter().flatten().any(|&s| !sol.is_winning(s)) {
        return Err(SynthError::Unrealizable);
    }
    let n_g = arena.guarantees.len() as u32;
    let m = sol.num_assumptions;

    let in_goal = |b: &[u32], j: u32| b.iter().all(|&s| arena.guarantees[j as usize].contains(s as usize));
    // advance memory past every guarantee the belief already satisfies
    let settle = |b: &[u32], j: u32| -> (u32, bool) {
        let mut j = j;
        for _ in 0..n_g {
            if !in_goal(b, j) {
                return (j, false);
            }
            j = (j + 1) % n_g;
        }
        (j, true)
    };

    let key = |j: u32, s: u32| sol.keys[j as usize][s as usize];
    // Whether option `o` at state `s` keeps the strategy for `j` on track.
    let acceptable = |s: u32, j: u32, o: Opt, all_goals: bool| -> Option<u32> {
        let out = arena.out(s);
        let frozen = arena.is_frozen(s);
        let mut succ = Vec::new();
        let mut any_env = false;
        for &(l, t) in out {
            let env_move = frozen || !arena.is_controlled(l);
            if env_move {
                any_env = true;
                succ.push(t);
            } else if o == Opt::Act(l) {
                succ.push(t);
            }
        }
        match o {
            Opt::Wait if !any_env => return None,
            Opt::Act(_) if frozen => return None,
            Opt::Act(l) if !out.iter().any(|&(x, _)| x == l) => return None,
            _ => {}
        }
        if succ.iter().any(|&t| t == ERROR || !sol.is_winning(t)) {
            return None;
        }
        let worst = succ.iter().map(|&t| key(j, t)).max().unwrap_or(0);
        if all_goals {
            return Some(worst);
        }
        let k = key(j, s);
        debug_assert_ne!(k, UNRANKED);
        let (r, i) = (k / m, k % m);
        if worst / m < r || (worst <= k && !arena.assumption(i as usize, s)) {
            Some(worst)
        } else {
            None
        }
    };

    let mut index: HashMap<(Vec<u32>, u32), StateId> = HashMap::new();
    let mut nodes: Vec<(Vec<u32>, u32, bool)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: Vec<u32>, j: u32, nodes: &mut Vec<(Vec<u32>, u32, bool)>, queue: &mut VecDeque<StateId>| -> Result<StateId, SynthError> {
        let (j, all) = settle(&b, j);
        if let Some(&id) = index.get(&(b.clone(), j)) {
            return Ok(id);
        }
        let id = nodes.len() as StateId;
        if nodes.len() >= MAX_CONTROLLER_STATES {
            return Err(SynthError::TooLarge(MAX_CONTROLLER_STATES));
        }
        index.insert((b.clone(), j), id);
        nodes.push((b, j, all));
        queue.push_back(id);
        Ok(id)
    };
    let mut root_ids = Vec::with_capacity(roots.len());
    for r in roots {
        let mut b = r.clone();
        b.sort_unstable();
        b.dedup();
        root_ids.push(intern(b, 0, &mut nodes, &mut queue)?);
    }

    let mut adj: Vec<Vec<(u32, StateId)>> = Vec::new();
    let mut choice: Vec<Option<Label>> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let (belief, j, all) = nodes[id as usize].clone();
        // candidate options: controlled labels enabled everywhere, then waiting
        let mut options: BTreeSet<Opt> = BTreeSet::new();
        options.insert(Opt::Wait);
        for &s in &belief {
            for g in arena.controlled_groups(s) {
                options.insert(Opt::Act(g[0].0));
            }
        }
        let mut best: Option<(u32, u8, &Label, Opt)> = None;
        for &o in &options {
            let mut worst = 0;
            let mut ok = true;
            for &s in &belief {
                match acceptable(s, j, o, all) {
                    Some(w) => worst = worst.max(w),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let (wait, name) = match o {
                Opt::Act(l) => (0, arena.label(l)),
                Opt::Wait => (1, arena.label(0)),
            };
            let cand = (worst / m, wait, name, o);
            if best.as_ref().is_none_or(|b| (cand.0, cand.1, cand.2) < (b.0, b.1, b.2)) {
                best = Some(cand);
            }
        }
        let Some((_, _, _, opt)) = best else {
            return Err(SynthError::Unobservable(belief.iter().map(|&s| arena.env_state[s as usize]).collect()));
        };

        // successors grouped by label
        let mut by_label: Vec<(u32, Vec<u32>)> = Vec::new();
        for &s in &belief {
            let frozen = arena.is_frozen(s);
            for &(l, t) in arena.out(s) {
                if frozen || !arena.is_controlled(l) || opt == Opt::Act(l) {
                    match by_label.iter_mut().find(|(x, _)| *x == l) {
                        Some((_, v)) => v.push(t),
                        None => by_label.push((l, vec![t])),
                    }
                }
            }
        }
        by_label.sort_by_key(|(l, _)| *l);
        let mut out = Vec::with_capacity(by_label.len());
        for (l, mut targets) in by_label {
            targets.sort_unstable();
            targets.dedup();
            debug_assert!(targets.iter().all(|&t| t != ERROR));
            let t = intern(targets, j, &mut nodes, &mut queue)?;
            out.push((l, t));
        }
        if adj.len() <= id as usize {
            adj.resize(id as usize + 1, Vec::new());
            choice.resize(id as usize + 1, None);
        }
        adj[id as usize] = out;
        choice[id as usize] = match opt {
            Opt::Act(l) => Some(arena.label(l).clone()),
            Opt::Wait => None,
        };
    }
    adj.resize(nodes.len(), Vec::new());
    choice.resize(nodes.len(), None);
    let names = nodes
        .iter()
        .map(|(b, j, _)| {
            let env: Vec<String> = b.iter().map(|&s| arena.env_state[s as usize].to_string()).collect();
            format!("{}/{j}", env.join("|"))
        })
        .collect();
    let lts = Lts::from_adjacency(arena.labels().to_vec(), root_ids[0], adj).with_names(names);
    let c = Controller {
        lts,
        belief: nodes.iter().map(|(b, _, _)| b.clone()).collect(),
        memory: nodes.iter().map(|(_, j, _)| *j).collect(),
        choice,
    };
    Ok((c, root_ids))
}
