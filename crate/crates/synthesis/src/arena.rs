//! Game arenas: the environment LTS in lockstep with the goal observer.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use skyweave_fltl::{ObsState, Observer, ObserverBuilder};
use skyweave_lts::{Label, StateId};

use crate::{ControlProblem, SynthError};

pub const ERROR: u32 = 0;

/// Arena states beyond this count are refused.
pub const MAX_STATES: usize = 1 << 24;

/// Explicit two-player arena. State [`ERROR`] is the absorbing losing sink;
/// it has no successors.
#[derive(Clone, Debug)]
pub struct Arena {
    labels: Vec<Label>,
    controlled: Vec<bool>,
    offsets: Vec<u32>,
    edges: Vec<(u32, u32)>,
    frozen: FixedBitSet,
    initial: u32,
    pub assumptions: Vec<FixedBitSet>,
    pub guarantees: Vec<FixedBitSet>,
    /// Environment state of each arena state (`StateId::MAX` for ERROR).
    pub env_state: Vec<StateId>,
    /// Observer state id of each arena state, indexing `obs_states`.
    pub obs_state: Vec<u32>,
    pub obs_states: Vec<ObsState>,
}

impl Arena {
    /// Builds an arena from explicit successor lists. `succ[s]` lists
    /// `(label index, target)`; state 0 must be the ERROR sink.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        labels: Vec<Label>,
        controlled: Vec<bool>,
        succ: Vec<Vec<(u32, u32)>>,
        frozen: FixedBitSet,
        initial: u32,
        assumptions: Vec<FixedBitSet>,
        guarantees: Vec<FixedBitSet>,
    ) -> Arena {
        assert!(succ[ERROR as usize].is_empty(), "ERROR has no successors");
        let n = succ.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for mut out in succ {
            out.sort_unstable();
            out.dedup();
            edges.extend(out);
            offsets.push(edges.len() as u32);
        }
        let guarantees = if guarantees.is_empty() { vec![full(n)] } else { guarantees };
        Arena {
            labels,
            controlled,
            offsets,
            edges,
            frozen,
            initial,
            assumptions,
            guarantees,
            env_state: (0..n as StateId).collect(),
            obs_state: vec![0; n],
            obs_states: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, li: u32) -> &Label {
        &self.labels[li as usize]
    }

    pub fn is_controlled(&self, li: u32) -> bool {
        self.controlled[li as usize]
    }

    pub fn is_frozen(&self, s: u32) -> bool {
        self.frozen.contains(s as usize)
    }

    /// Outgoing `(label, target)` pairs sorted by label.
    pub fn out(&self, s: u32) -> &[(u32, u32)] {
        &self.edges[self.offsets[s as usize] as usize..self.offsets[s as usize + 1] as usize]
    }

    /// Number of assumptions the solver iterates over; at least one.
    pub fn num_assumptions(&self) -> usize {
        self.assumptions.len().max(1)
    }

    /// Whether `s` satisfies assumption `i`. With no assumptions the single
    /// implicit assumption is `true`.
    pub fn assumption(&self, i: usize, s: u32) -> bool {
        self.assumptions.get(i).is_none_or(|a| a.contains(s as usize))
    }

    /// Controllable predecessor: the controller can force the next state into `x`.
    pub fn cpre_at(&self, s: u32, x: &FixedBitSet) -> bool {
        let out = self.out(s);
        if out.is_empty() {
            return false;
        }
        if self.is_frozen(s) {
            return out.iter().all(|&(_, t)| x.contains(t as usize));
        }
        let mut any_uncontrolled = false;
        for &(l, t) in out {
            if !self.controlled[l as usize] {
                if !x.contains(t as usize) {
                    return false;
                }
                any_uncontrolled = true;
            }
        }
        if any_uncontrolled {
            return true;
        }
        self.controlled_groups(s).any(|g| g.iter().all(|&(_, t)| x.contains(t as usize)))
    }

    /// Controlled transitions of `s` grouped by label.
    pub fn controlled_groups(&self, s: u32) -> impl Iterator<Item = &[(u32, u32)]> + '_ {
        let out = self.out(s);
        let ctl = &self.controlled;
        out.chunk_by(|a, b| a.0 == b.0).filter(move |g| ctl[g[0].0 as usize])
    }

    pub fn cpre(&self, x: &FixedBitSet, domain: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.num_states());
        for s in domain.ones() {
            if self.cpre_at(s as u32, x) {
                out.insert(s);
            }
        }
        out
    }
}

pub(crate) fn full(n: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    b.insert_range(..);
    b
}

/// Result of [`build`]: the arena plus the observer that labels it.
pub struct Built {
    pub arena: Arena,
    pub observer: Observer,
    /// Expression ids of the assumptions and guarantees in `observer`.
    pub assumption_exprs: Vec<usize>,
    pub guarantee_exprs: Vec<usize>,
}

/// Explores `E x observer` from the joint initial state. Every safety
/// violation is redirected to the single ERROR sink.
pub fn build(p: &ControlProblem) -> Result<Built, SynthError> {
    let env = &p.env;
    let mut ob = ObserverBuilder::new(env.alphabet().iter().cloned(), &p.fluents)?;
    for (f, g) in &p.safety {
        ob.add_safety(f, g.clone())?;
    }
    let assumption_exprs = p.liveness.assumptions.iter().map(|e| ob.add_expr(e)).collect::<Result<Vec<_>, _>>()?;
    let guarantee_exprs = p.guarantees().iter().map(|e| ob.add_expr(e)).collect::<Result<Vec<_>, _>>()?;
    let observer = ob.build();

    let labels: Vec<Label> = env.alphabet().to_vec();
    let controlled: Vec<bool> = labels.iter().map(|l| p.is_controlled(l)).collect();
    let obs_label: Vec<u32> = labels.iter().map(|l| observer.label_index(l.as_str()).expect("observer covers env")).collect();

    let mut obs = Interner::default();

    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut env_state = vec![StateId::MAX];
    let mut obs_state = vec![u32::MAX];
    let o0 = obs.intern(observer.initial());
    index.insert(key(env.initial(), o0), 1);
    env_state.push(env.initial());
    obs_state.push(o0);

    let mut succ: Vec<Vec<(u32, u32)>> = vec![Vec::new(), Vec::new()];
    let mut next = 1usize;
    // obs successor cache keyed by (obs id, obs label)
    let mut step_cache: HashMap<(u32, u32), Option<u32>> = HashMap::new();
    while next < env_state.len() {
        let (e, o) = (env_state[next], obs_state[next]);
        let mut out = Vec::with_capacity(env.out(e).len());
        for &(li, t) in env.out(e) {
            let ol = obs_label[li as usize];
            let o2 = match step_cache.get(&(o, ol)) {
                Some(&r) => r,
                None => {
                    let cur = obs.states[o as usize].clone();
                    let r = observer.step(&cur, ol).map(|x| obs.intern(x));
                    step_cache.insert((o, ol), r);
                    r
                }
            };
            let target = match o2 {
                None => ERROR,
                Some(o2) => {
                    let k = key(t, o2);
                    match index.get(&k) {
                        Some(&id) => id,
                        None => {
                            let id = env_state.len() as u32;
                            if id as usize >= MAX_STATES {
                                return Err(SynthError::TooLarge(MAX_STATES));
                            }
                            index.insert(k, id);
                            env_state.push(t);
                            obs_state.push(o2);
                            succ.push(Vec::new());
                            id
                        }
                    }
                }
            };
            out.push((li, target));
        }
        succ[next] = out;
        next += 1;
    }

    let n = env_state.len();
    let obs_vec = obs.states;
    let label_set = |expr: usize| {
        let mut b = FixedBitSet::with_capacity(n);
        for s in 1..n {
            if observer.eval(expr, &obs_vec[obs_state[s] as usize]) {
                b.insert(s);
            }
        }
        b
    };
    let assumptions = assumption_exprs.iter().map(|&e| label_set(e)).collect();
    let guarantees = guarantee_exprs.iter().map(|&e| label_set(e)).collect();
    let mut frozen = FixedBitSet::with_capacity(n);
    if let Some(fz) = &p.frozen {
        for s in 1..n {
            if fz.contains(env_state[s] as usize) {
                frozen.insert(s);
            }
        }
    }
    let mut arena = Arena::from_parts(labels, controlled, succ, frozen, 1, assumptions, guarantees);
    arena.env_state = env_state;
    arena.obs_state = obs_state;
    arena.obs_states = obs_vec;
    Ok(Built { arena, observer, assumption_exprs, guarantee_exprs })
}

fn key(e: StateId, o: u32) -> u64 {
    ((e as u64) << 32) | o as u64
}

#[derive(Default)]
struct Interner {
    index: HashMap<ObsState, u32>,
    states: Vec<ObsState>,
}

impl Interner {
    fn intern(&mut self, o: ObsState) -> u32 {
        if let Some(&i) = self.index.get(&o) {
            return i;
        }
        self.states.push(o.clone());
        self.index.insert(o, (self.states.len() - 1) as u32);
        (self.states.len() - 1) as u32
    }
}
