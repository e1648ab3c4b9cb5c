//! Dynamic controller update.
//!
//! Given a controller `C` running against `E`, computes `C'` and a total map
//! `f` from the states of `C` such that swapping to `f(c)` on `hotSwap`
//! keeps the old safety goal until `stopOld`, the transition requirement
//! throughout and the new goal from `startNew`, while the environment is
//! switched from `E` to `E'` by a single controlled `reconfig`.
//!
//! The update is reduced to an ordinary control problem over
//! `E_u = (C || E) -hotSwap-> (E -reconfig-> E' || latches)`.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use skyweave_fltl::{BoolExpr, Gr1Liveness, Guard, SafetyFormula};
use skyweave_lang::{ComponentMap, Model, HOT_SWAP, RECONFIG, START_NEW, STOP_OLD};
use skyweave_lts::{compose_all, compose_all_from, interrupt, interrupt_partial, Label, Lts, LtsError, StateId, StateMap};
use skyweave_synthesis::{arena, extract_from, solve, verify_watching, ClosedLoop, Controller, ControlProblem, Stats, SynthError, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DcuError {
    #[error("no update problem named {0}")]
    UnknownProblem(String),
    #[error("no process named {0}")]
    UnknownProcess(String),
    #[error("map {from} -> {to} does not match the old and new components")]
    BadMap { from: String, to: String },
    #[error("the update problem is unrealizable")]
    Unrealizable,
    /// Controller states without an entry in `f`.
    #[error("state map is not total: {0:?}")]
    NotTotal(Vec<StateId>),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Lts(#[from] LtsError),
}

/// An update request `(E, phi) => (E', phi')` under transition requirement
/// `theta`.
#[derive(Clone, Debug)]
pub struct UpdateProblem {
    pub name: String,
    pub old: ControlProblem,
    pub new: ControlProblem,
    pub old_parts: Vec<(String, Lts)>,
    pub new_parts: Vec<(String, Lts)>,
    pub maps: Vec<ComponentMap>,
    /// `None` stands for the default `[](!OldStopped || NewStarted)`.
    pub theta: Option<SafetyFormula>,
}

pub fn label(s: &str) -> Label {
    Label::from_static(s)
}

/// `[](!OldStopped || NewStarted)`: the new mission starts no later than the
/// old one stops.
pub fn theta_empty() -> SafetyFormula {
    SafetyFormula::Always(BoolExpr::Or(vec![BoolExpr::not(BoolExpr::fluent("OldStopped")), BoolExpr::fluent("NewStarted")]))
}

impl UpdateProblem {
    pub fn from_model(model: &Model, name: &str) -> Result<UpdateProblem, DcuError> {
        let decl = model.update_problem(name).ok_or_else(|| DcuError::UnknownProblem(name.to_string()))?;
        let old = ControlProblem::from_model(model, &decl.old)?;
        let new = ControlProblem::from_model(model, &decl.new)?;
        let parts = |problem: &str| -> Result<Vec<(String, Lts)>, DcuError> {
            let env = &model.control_problem(problem).expect("resolved").env;
            let names = model.components.get(env).cloned().unwrap_or_else(|| vec![env.clone()]);
            names
                .into_iter()
                .map(|n| {
                    let lts = model.processes.get(&n).cloned().ok_or_else(|| DcuError::UnknownProcess(n.clone()))?;
                    Ok((n, lts))
                })
                .collect()
        };
        let theta = if decl.theta.is_empty() { None } else { Some(model.safety_of(&decl.theta)) };
        let up = UpdateProblem {
            name: decl.name.clone(),
            old,
            new,
            old_parts: parts(&decl.old)?,
            new_parts: parts(&decl.new)?,
            maps: decl.maps.clone(),
            theta,
        };
        for m in &up.maps {
            if !up.old_parts.iter().any(|p| p.0 == m.from) || !up.new_parts.iter().any(|p| p.0 == m.to) {
                return Err(DcuError::BadMap { from: m.from.clone(), to: m.to.clone() });
            }
        }
        Ok(up)
    }

    pub fn theta(&self) -> SafetyFormula {
        self.theta.clone().unwrap_or_else(theta_empty)
    }
}

/// `E_u` and how it relates to its operands.
#[derive(Clone, Debug)]
pub struct UpdateEnvironment {
    pub lts: Lts,
    /// `C || E`; its states keep their ids inside `lts`.
    pub pre: Lts,
    /// The post-swap environment.
    pub post: Lts,
}

impl UpdateEnvironment {
    pub fn is_pre_swap(&self, s: StateId) -> bool {
        (s as usize) < self.pre.num_states()
    }

    /// State of the old controller in a pre-swap state.
    pub fn controller_state(&self, s: StateId) -> Option<StateId> {
        self.is_pre_swap(s).then(|| self.pre.provenance(s).expect("composition provenance")[0])
    }
}

/// Two-state LTS allowing `l` once.
fn latch(l: &Label) -> Lts {
    Lts::from_parts([l.clone()], 2, 0, [(0, l.clone(), 1)]).expect("latch")
}

/// Builds `E_u` for the old controller `c`.
pub fn build_update_environment(up: &UpdateProblem, c: &Lts) -> Result<UpdateEnvironment, DcuError> {
    let reconfig = label(RECONFIG);
    let old_refs: Vec<&Lts> = std::iter::once(c).chain(up.old_parts.iter().map(|p| &p.1)).collect();
    let pre = compose_all(&old_refs);

    // one piece per post-swap component; `seed[k]` gives the piece state an
    // old state tuple enters, as a function of the old part states
    enum Seed {
        Old(usize),
        Fixed(StateId),
    }
    let mut pieces: Vec<Lts> = Vec::new();
    let mut seeds: Vec<Seed> = Vec::new();
    let mapped_to = |n: &str| up.maps.iter().any(|m| m.to == n);
    for (k, (name, x)) in up.old_parts.iter().enumerate() {
        if let Some(m) = up.maps.iter().find(|m| &m.from == name) {
            let y = &up.new_parts.iter().find(|p| p.0 == m.to).expect("checked").1;
            pieces.push(interrupt_partial(x, y, &reconfig, &m.map)?);
        } else if up.new_parts.iter().any(|p| &p.0 == name) && !mapped_to(name) {
            pieces.push(x.clone());
        } else {
            let mut drop = StateMap::new();
            for s in 0..x.num_states() as StateId {
                drop.insert(s, 0);
            }
            pieces.push(interrupt_partial(x, &Lts::unit([]), &reconfig, &drop)?);
        }
        seeds.push(Seed::Old(k));
    }
    for (name, y) in &up.new_parts {
        let kept = up.old_parts.iter().any(|p| &p.0 == name) && !mapped_to(name);
        if kept || mapped_to(name) {
            continue;
        }
        let mut start = StateMap::new();
        start.insert(0, y.initial());
        pieces.push(interrupt_partial(&Lts::unit([]), y, &reconfig, &start)?);
        seeds.push(Seed::Fixed(0));
    }
    for l in [STOP_OLD, START_NEW, RECONFIG] {
        pieces.push(latch(&label(l)));
        seeds.push(Seed::Fixed(0));
    }

    let entry = |p: StateId| -> Vec<StateId> {
        let t = pre.provenance(p).expect("composition provenance");
        seeds
            .iter()
            .map(|s| match s {
                Seed::Old(k) => t[k + 1],
                Seed::Fixed(v) => *v,
            })
            .collect()
    };
    let mut roots: Vec<Vec<StateId>> = Vec::new();
    let mut root_of: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut h_tuple = Vec::with_capacity(pre.num_states());
    for p in 0..pre.num_states() as StateId {
        let t = entry(p);
        let i = *root_of.entry(t.clone()).or_insert_with(|| {
            roots.push(t);
            roots.len() - 1
        });
        h_tuple.push(i);
    }
    let piece_refs: Vec<&Lts> = pieces.iter().collect();
    let post = compose_all_from(&piece_refs, &roots);
    let index: HashMap<&[StateId], StateId> =
        (0..post.num_states() as StateId).map(|q| (post.provenance(q).expect("composition provenance"), q)).collect();
    let mut h = StateMap::new();
    for (p, &i) in h_tuple.iter().enumerate() {
        h.insert(p as StateId, index[roots[i].as_slice()]);
    }
    let lts = interrupt(&pre, &post, &label(HOT_SWAP), &h)?;
    Ok(UpdateEnvironment { lts, pre, post })
}

/// The update goal as a control problem over `env`.
pub fn update_control_problem(up: &UpdateProblem, env: &UpdateEnvironment) -> ControlProblem {
    let controlled = up
        .old
        .alphabet
        .controlled
        .iter()
        .chain(&up.new.alphabet.controlled)
        .cloned()
        .chain([STOP_OLD, START_NEW, RECONFIG].map(label));
    let mut p = ControlProblem::new(format!("{}.update", up.name), env.lts.clone(), controlled);
    let mut fluents = up.old.fluents.clone();
    for f in &up.new.fluents {
        if !fluents.iter().any(|g| g.name == f.name) {
            fluents.push(f.clone());
        }
    }
    p.fluents = fluents;
    let old_safety = SafetyFormula::and(up.old.safety.iter().map(|s| s.0.clone()));
    let new_safety = SafetyFormula::and(up.new.safety.iter().map(|s| s.0.clone()));
    p.safety = vec![
        (old_safety, Guard::Until(label(STOP_OLD))),
        (up.theta(), Guard::Always),
        (new_safety, Guard::From(label(START_NEW))),
    ];
    let done = BoolExpr::And(["OldStopped", "NewStarted", "Reconfigured"].map(BoolExpr::fluent).to_vec());
    let mut assumptions = vec![BoolExpr::fluent("HotSwap")];
    assumptions.extend(up.new.liveness.assumptions.iter().cloned());
    let mut guarantees = vec![done];
    guarantees.extend(up.new.liveness.guarantees.iter().cloned());
    p.liveness = Gr1Liveness { assumptions, guarantees };
    let mut frozen = FixedBitSet::with_capacity(env.lts.num_states());
    frozen.insert_range(0..env.pre.num_states());
    p.frozen = Some(frozen);
    p
}

pub struct UpdateSolution {
    pub problem: ControlProblem,
    pub env: UpdateEnvironment,
    pub new_controller: Controller,
    /// `C'` without `hotSwap` in its alphabet.
    pub new_lts: Lts,
    /// Total map from states of the old controller to states of `new_lts`.
    pub f: StateMap,
    /// `C -hotSwap-> C'` under `f`.
    pub combined: Lts,
    pub stats: Stats,
}

fn without_label(l: &Lts, drop: &str) -> Lts {
    let alphabet: Vec<Label> = l.alphabet().iter().filter(|x| x.as_str() != drop).cloned().collect();
    let remap: Vec<Option<u32>> =
        l.alphabet().iter().map(|x| alphabet.binary_search(x).ok().map(|i| i as u32)).collect();
    let adj = (0..l.num_states() as StateId)
        .map(|s| l.out(s).iter().filter_map(|&(li, t)| remap[li as usize].map(|n| (n, t))).collect())
        .collect();
    Lts::from_adjacency(alphabet, l.initial(), adj)
}

/// Solves the update for the running controller `c`.
pub fn solve_update(up: &UpdateProblem, c: &Lts) -> Result<UpdateSolution, DcuError> {
    let start = std::time::Instant::now();
    let env = build_update_environment(up, c)?;
    let problem = update_control_problem(up, &env);
    let built = arena::build(&problem)?;
    let a = &built.arena;
    let sol = solve(a);
    if !sol.is_winning(a.initial()) {
        return Err(DcuError::Unrealizable);
    }

    // belief of C' right after the swap, per state of C
    let hot = a.labels().iter().position(|l| l.as_str() == HOT_SWAP).map(|i| i as u32);
    let mut beliefs: Vec<Vec<u32>> = vec![Vec::new(); c.num_states()];
    for s in 0..a.num_states() as u32 {
        let e = a.env_state[s as usize];
        let Some(cs) = env.controller_state(e) else { continue };
        for &(l, t) in a.out(s) {
            if Some(l) == hot {
                beliefs[cs as usize].push(t);
            }
        }
    }
    let missing: Vec<StateId> = (0..c.num_states() as StateId).filter(|&s| beliefs[s as usize].is_empty()).collect();
    let reachable = c.reachable_set();
    if let Some(&s) = missing.iter().find(|&&s| reachable[s as usize]) {
        // a reachable C state never met in C || E is fine only if E rules it out
        let in_pre = (0..env.pre.num_states() as StateId).any(|p| env.pre.provenance(p).unwrap()[0] == s);
        if in_pre {
            return Err(DcuError::NotTotal(vec![s]));
        }
    }
    let present: Vec<StateId> = (0..c.num_states() as StateId).filter(|&s| !beliefs[s as usize].is_empty()).collect();
    let roots: Vec<Vec<u32>> = present.iter().map(|&s| beliefs[s as usize].clone()).collect();
    let (new_controller, root_ids) = extract_from(a, &sol, &roots)?;
    let new_lts = without_label(&new_controller.lts, HOT_SWAP);
    let mut f = StateMap::new();
    for (&s, &r) in present.iter().zip(&root_ids) {
        f.insert(s, r);
    }
    // states of C that never meet E get an arbitrary image to keep f total
    for &s in &missing {
        f.insert(s, root_ids[0]);
    }
    let combined = interrupt(c, &new_lts, &label(HOT_SWAP), &f)?;
    let stats = Stats {
        arena_states: a.num_states(),
        arena_edges: a.num_edges(),
        outer_iterations: sol.outer_iterations,
        cpre_calls: sol.cpre_calls,
        controller_states: new_lts.num_states(),
        elapsed: start.elapsed(),
    };
    Ok(UpdateSolution { problem, env, new_controller, new_lts, f, combined, stats })
}

/// Model-checks the combined controller against `E_u` and the update goal.
pub fn verify_update(sol: &UpdateSolution) -> Result<(ClosedLoop, Verdict), DcuError> {
    verify_update_watching(sol, &[])
}

/// [`verify_update`], also tracking the named fluents in the closed loop.
pub fn verify_update_watching(sol: &UpdateSolution, watch: &[&str]) -> Result<(ClosedLoop, Verdict), DcuError> {
    Ok(verify_watching(&sol.problem, &sol.combined, watch)?)
}
