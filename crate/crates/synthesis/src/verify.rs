//! Exhaustive closed-loop checking of `E || C` against the goal.

use std::collections::{HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use skyweave_fltl::{BoolExpr, ObsState, Observer, ObserverBuilder};
use skyweave_lts::{Label, Lts, StateId};

use crate::{ControlProblem, SynthError};

/// Reachable part of `E || C` paired with the goal observer.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub labels: Vec<Label>,
    pub env: Vec<StateId>,
    pub ctrl: Vec<StateId>,
    pub obs: Vec<ObsState>,
    pub edges: Vec<Vec<(u32, u32)>>,
    parent: Vec<Option<(u32, u32)>>,
    pub observer: Observer,
    assumption_exprs: Vec<usize>,
    guarantee_exprs: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    pub states: usize,
    /// Trace ending in an event that violates the safety goal.
    pub safety_violation: Option<Vec<Label>>,
    pub deadlock: Option<Vec<Label>>,
    /// Trace to a state where the controller blocks an environment event.
    pub illegal: Option<(Vec<Label>, Label)>,
    /// Index of a guarantee some fair cycle never visits.
    pub liveness_violation: Option<usize>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.safety_violation.is_none() && self.deadlock.is_none() && self.illegal.is_none() && self.liveness_violation.is_none()
    }
}

impl ClosedLoop {
    pub fn num_states(&self) -> usize {
        self.env.len()
    }

    /// Events from the initial state to `s`.
    pub fn trace_to(&self, s: u32) -> Vec<Label> {
        let mut out = Vec::new();
        let mut cur = s;
        while let Some((p, l)) = self.parent[cur as usize] {
            out.push(self.labels[l as usize].clone());
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn fluent(&self, s: u32, name: &str) -> Option<bool> {
        self.observer.fluent_value(&self.obs[s as usize], name)
    }

    /// Whether some cycle runs through states satisfying `keep` only, using
    /// only edges accepted by `edge`, and meets every set in `must_meet`.
    pub fn has_cycle(&self, keep: impl Fn(u32) -> bool, edge: impl Fn(u32, u32, u32) -> bool, must_meet: &[&dyn Fn(u32) -> bool]) -> bool {
        let n = self.num_states();
        let mut g: DiGraph<u32, ()> = DiGraph::with_capacity(n, 0);
        for s in 0..n {
            g.add_node(s as u32);
        }
        for s in 0..n as u32 {
            if !keep(s) {
                continue;
            }
            for &(l, t) in &self.edges[s as usize] {
                if keep(t) && edge(s, l, t) {
                    g.add_edge(NodeIndex::new(s as usize), NodeIndex::new(t as usize), ());
                }
            }
        }
        for scc in tarjan_scc(&g) {
            let nontrivial = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            if !nontrivial || !keep(scc[0].index() as u32) {
                continue;
            }
            if must_meet.iter().all(|p| scc.iter().any(|v| p(v.index() as u32))) {
                return true;
            }
        }
        false
    }

    fn assumption(&self, i: usize, s: u32) -> bool {
        self.observer.eval(self.assumption_exprs[i], &self.obs[s as usize])
    }

    pub fn guarantee(&self, j: usize, s: u32) -> bool {
        self.observer.eval(self.guarantee_exprs[j], &self.obs[s as usize])
    }

    pub fn num_guarantees(&self) -> usize {
        self.guarantee_exprs.len()
    }
}

/// Explores `env || controller` and checks safety, deadlock freedom,
/// legality and the GR(1) goal of `p`.
pub fn verify(p: &ControlProblem, controller: &Lts) -> Result<(ClosedLoop, Verdict), SynthError> {
    verify_watching(p, controller, &[])
}

/// [`verify`], additionally tracking the named fluents so that
/// [`ClosedLoop::fluent`] can report them.
pub fn verify_watching(p: &ControlProblem, controller: &Lts, watch: &[&str]) -> Result<(ClosedLoop, Verdict), SynthError> {
    let env = &p.env;
    let labels: Vec<Label> =
        env.alphabet().iter().chain(controller.alphabet()).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut ob = ObserverBuilder::new(labels.iter().cloned(), &p.fluents)?;
    for (f, g) in &p.safety {
        ob.add_safety(f, g.clone())?;
    }
    let assumption_exprs = p.liveness.assumptions.iter().map(|e| ob.add_expr(e)).collect::<Result<Vec<_>, _>>()?;
    let guarantee_exprs = p.guarantees().iter().map(|e| ob.add_expr(e)).collect::<Result<Vec<_>, _>>()?;
    for f in watch {
        ob.add_expr(&BoolExpr::fluent(f))?;
    }
    let observer = ob.build();

    let e_idx: Vec<Option<u32>> = labels.iter().map(|l| env.label_index(l.as_str())).collect();
    let c_idx: Vec<Option<u32>> = labels.iter().map(|l| controller.label_index(l.as_str())).collect();
    let o_idx: Vec<u32> = labels.iter().map(|l| observer.label_index(l.as_str()).unwrap()).collect();

    let mut index: HashMap<(StateId, StateId, ObsState), u32> = HashMap::new();
    let mut cl = ClosedLoop {
        labels: labels.clone(),
        env: vec![env.initial()],
        ctrl: vec![controller.initial()],
        obs: vec![observer.initial()],
        edges: vec![Vec::new()],
        parent: vec![None],
        observer: observer.clone(),
        assumption_exprs,
        guarantee_exprs,
    };
    index.insert((env.initial(), controller.initial(), observer.initial()), 0);
    let mut v = Verdict::default();
    let mut queue = VecDeque::from([0u32]);
    while let Some(s) = queue.pop_front() {
        let (e, c) = (cl.env[s as usize], cl.ctrl[s as usize]);
        let frozen = p.frozen.as_ref().is_some_and(|f| f.contains(e as usize));
        let mut out = Vec::new();
        for (l, label) in labels.iter().enumerate() {
            let e_next: Vec<StateId> = match e_idx[l] {
                Some(li) => env.out(e).iter().filter(|x| x.0 == li).map(|x| x.1).collect(),
                None => vec![e],
            };
            let c_next: Vec<StateId> = match c_idx[l] {
                Some(li) => controller.out(c).iter().filter(|x| x.0 == li).map(|x| x.1).collect(),
                None => vec![c],
            };
            if e_idx[l].is_some() && !e_next.is_empty() && c_next.is_empty() && (frozen || !p.is_controlled(label)) && v.illegal.is_none() {
                v.illegal = Some((cl.trace_to(s), label.clone()));
            }
            if e_next.is_empty() || c_next.is_empty() {
                continue;
            }
            let Some(o2) = observer.step(&cl.obs[s as usize], o_idx[l]) else {
                if v.safety_violation.is_none() {
                    let mut t = cl.trace_to(s);
                    t.push(label.clone());
                    v.safety_violation = Some(t);
                }
                continue;
            };
            for &e2 in &e_next {
                for &c2 in &c_next {
                    let k = (e2, c2, o2.clone());
                    let t = match index.get(&k) {
                        Some(&t) => t,
                        None => {
                            let t = cl.env.len() as u32;
                            index.insert(k, t);
                            cl.env.push(e2);
                            cl.ctrl.push(c2);
                            cl.obs.push(o2.clone());
                            cl.edges.push(Vec::new());
                            cl.parent.push(Some((s, l as u32)));
                            queue.push_back(t);
                            t
                        }
                    };
                    out.push((l as u32, t));
                }
            }
        }
        if out.is_empty() && v.deadlock.is_none() {
            v.deadlock = Some(cl.trace_to(s));
        }
        cl.edges[s as usize] = out;
    }
    v.states = cl.num_states();

    let n_a = cl.assumption_exprs.len();
    let r = &cl;
    for j in 0..cl.num_guarantees() {
        let preds: Vec<Box<dyn Fn(u32) -> bool + '_>> =
            (0..n_a).map(|i| Box::new(move |s: u32| r.assumption(i, s)) as Box<dyn Fn(u32) -> bool>).collect();
        let refs: Vec<&dyn Fn(u32) -> bool> = preds.iter().map(|b| b.as_ref()).collect();
        if r.has_cycle(|s| !r.guarantee(j, s), |_, _, _| true, &refs) {
            v.liveness_violation = Some(j);
            break;
        }
    }
    Ok((cl, v))
}
