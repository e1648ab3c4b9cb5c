use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::{Label, LtsError};

pub type StateId = u32;

/// A finite labelled transition system.
///
/// States are dense ids `0..num_states`. Transitions are stored per source
/// state as `(label index, target)` pairs sorted by label index, where the
/// label index points into the sorted `alphabet`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    alphabet: Vec<Label>,
    initial: StateId,
    adj: Vec<Vec<(u32, StateId)>>,
    provenance: Vec<Vec<StateId>>,
    names: Vec<String>,
}

impl Lts {
    /// Builds an LTS from explicit transitions. Every label used must be in
    /// `alphabet` and every endpoint must be below `num_states`.
    pub fn from_parts(
        alphabet: impl IntoIterator<Item = Label>,
        num_states: usize,
        initial: StateId,
        transitions: impl IntoIterator<Item = (StateId, Label, StateId)>,
    ) -> Result<Lts, LtsError> {
        let alphabet: Vec<Label> = alphabet.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if initial as usize >= num_states {
            return Err(LtsError::UnknownState(initial));
        }
        let mut adj = vec![Vec::new(); num_states];
        for (s, l, t) in transitions {
            let li = alphabet
                .binary_search(&l)
                .map_err(|_| LtsError::LabelNotInAlphabet(l.clone()))?;
            if s as usize >= num_states {
                return Err(LtsError::UnknownState(s));
            }
            if t as usize >= num_states {
                return Err(LtsError::UnknownState(t));
            }
            adj[s as usize].push((li as u32, t));
        }
        Ok(Lts::from_adjacency(alphabet, initial, adj))
    }

    /// Low-level constructor over label indices. The alphabet must already be
    /// sorted and duplicate-free.
    pub fn from_adjacency(alphabet: Vec<Label>, initial: StateId, mut adj: Vec<Vec<(u32, StateId)>>) -> Lts {
        debug_assert!(alphabet.windows(2).all(|w| w[0] < w[1]));
        for out in &mut adj {
            out.sort_unstable();
            out.dedup();
        }
        Lts { alphabet, initial, adj, provenance: Vec::new(), names: Vec::new() }
    }

    /// Single state, no transitions.
    pub fn unit(alphabet: impl IntoIterator<Item = Label>) -> Lts {
        let alphabet: Vec<Label> = alphabet.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Lts::from_adjacency(alphabet, 0, vec![Vec::new()])
    }

    pub fn with_names(mut self, names: Vec<String>) -> Lts {
        assert_eq!(names.len(), self.adj.len());
        self.names = names;
        self
    }

    pub fn with_provenance(mut self, provenance: Vec<Vec<StateId>>) -> Lts {
        assert_eq!(provenance.len(), self.adj.len());
        self.provenance = provenance;
        self
    }

    pub fn num_states(&self) -> usize {
        self.adj.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn alphabet(&self) -> &[Label] {
        &self.alphabet
    }

    pub fn has_label(&self, l: &str) -> bool {
        self.label_index(l).is_some()
    }

    pub fn label_index(&self, l: &str) -> Option<u32> {
        self.alphabet.binary_search_by(|x| x.as_str().cmp(l)).ok().map(|i| i as u32)
    }

    pub fn label(&self, idx: u32) -> &Label {
        &self.alphabet[idx as usize]
    }

    /// Outgoing `(label index, target)` pairs of `s`, sorted.
    pub fn out(&self, s: StateId) -> &[(u32, StateId)] {
        &self.adj[s as usize]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &Label, StateId)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(s, out)| {
            out.iter().map(move |&(l, t)| (s as StateId, &self.alphabet[l as usize], t))
        })
    }

    pub fn num_transitions(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Labels enabled at `s`, without repetition.
    pub fn enabled(&self, s: StateId) -> Vec<&Label> {
        let mut v: Vec<&Label> = self.adj[s as usize].iter().map(|&(l, _)| &self.alphabet[l as usize]).collect();
        v.dedup();
        v
    }

    pub fn is_enabled(&self, s: StateId, l: &str) -> bool {
        match self.label_index(l) {
            Some(li) => self.adj[s as usize].iter().any(|&(x, _)| x == li),
            None => false,
        }
    }

    /// True iff no state has two outgoing transitions with the same label.
    pub fn is_deterministic(&self) -> bool {
        self.adj.iter().all(|out| out.windows(2).all(|w| w[0].0 != w[1].0))
    }

    pub fn provenance(&self, s: StateId) -> Option<&[StateId]> {
        self.provenance.get(s as usize).map(Vec::as_slice)
    }

    pub fn has_provenance(&self) -> bool {
        !self.provenance.is_empty()
    }

    pub fn state_name(&self, s: StateId) -> Option<&str> {
        self.names.get(s as usize).map(String::as_str)
    }

    pub fn has_names(&self) -> bool {
        !self.names.is_empty()
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name).map(|i| i as StateId)
    }

    /// All successors of `s` on `ev`.
    pub fn step(&self, s: StateId, ev: &str) -> Result<BTreeSet<StateId>, LtsError> {
        if s as usize >= self.adj.len() {
            return Err(LtsError::UnknownState(s));
        }
        let Some(li) = self.label_index(ev) else {
            return Ok(BTreeSet::new());
        };
        Ok(self.adj[s as usize].iter().filter(|&&(l, _)| l == li).map(|&(_, t)| t).collect())
    }

    /// States reachable from the initial state, in ascending id order.
    pub fn reachable_set(&self) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial as usize] = true;
        while let Some(s) = queue.pop_front() {
            for &(_, t) in &self.adj[s as usize] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Reachable states without outgoing transitions.
    pub fn deadlock_states(&self) -> BTreeSet<StateId> {
        self.reachable_set()
            .iter()
            .enumerate()
            .filter(|&(s, &r)| r && self.adj[s].is_empty())
            .map(|(s, _)| s as StateId)
            .collect()
    }

    /// Same LTS restricted to states reachable from the initial state.
    /// Surviving states keep their relative order.
    pub fn reachable(&self) -> Lts {
        let seen = self.reachable_set();
        let mut remap = vec![u32::MAX; self.adj.len()];
        let mut next = 0u32;
        for (s, &r) in seen.iter().enumerate() {
            if r {
                remap[s] = next;
                next += 1;
            }
        }
        let keep = |s: usize| seen[s];
        let adj = (0..self.adj.len())
            .filter(|&s| keep(s))
            .map(|s| self.adj[s].iter().map(|&(l, t)| (l, remap[t as usize])).collect())
            .collect();
        let mut out = Lts::from_adjacency(self.alphabet.clone(), remap[self.initial as usize], adj);
        if !self.provenance.is_empty() {
            out.provenance = (0..self.adj.len()).filter(|&s| keep(s)).map(|s| self.provenance[s].clone()).collect();
        }
        if !self.names.is_empty() {
            out.names = (0..self.adj.len()).filter(|&s| keep(s)).map(|s| self.names[s].clone()).collect();
        }
        out
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{name}\" {{");
        let _ = writeln!(s, "  rankdir=LR;");
        let _ = writeln!(s, "  __init [shape=point];");
        let _ = writeln!(s, "  __init -> s{};", self.initial);
        for st in 0..self.adj.len() {
            let label = match self.state_name(st as StateId) {
                Some(n) => n.to_string(),
                None => st.to_string(),
            };
            let _ = writeln!(s, "  s{st} [label=\"{label}\"];");
        }
        for (a, l, b) in self.transitions() {
            let _ = writeln!(s, "  s{a} -> s{b} [label=\"{l}\"];");
        }
        s.push_str("}\n");
        s
    }
}

/// Map from source states to nonempty sets of target states. Used for the
/// interrupt map and for environment reconfiguration maps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateMap {
    entries: BTreeMap<StateId, BTreeSet<StateId>>,
}

impl StateMap {
    pub fn new() -> StateMap {
        StateMap::default()
    }

    pub fn identity(n: usize) -> StateMap {
        let mut m = StateMap::new();
        for s in 0..n as StateId {
            m.insert(s, s);
        }
        m
    }

    pub fn constant(n: usize, target: StateId) -> StateMap {
        let mut m = StateMap::new();
        for s in 0..n as StateId {
            m.insert(s, target);
        }
        m
    }

    pub fn insert(&mut self, from: StateId, to: StateId) {
        self.entries.entry(from).or_default().insert(to);
    }

    pub fn get(&self, from: StateId) -> Option<&BTreeSet<StateId>> {
        self.entries.get(&from)
    }

    /// The unique target of `from`, if there is exactly one.
    pub fn get_single(&self, from: StateId) -> Option<StateId> {
        match self.entries.get(&from) {
            Some(t) if t.len() == 1 => t.iter().next().copied(),
            _ => None,
        }
    }

    pub fn contains(&self, from: StateId) -> bool {
        self.entries.contains_key(&from)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &BTreeSet<StateId>)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.entries.iter().flat_map(|(k, v)| v.iter().map(move |t| (*k, *t)))
    }

    pub fn is_functional(&self) -> bool {
        self.entries.values().all(|v| v.len() == 1)
    }
}

impl FromIterator<(StateId, StateId)> for StateMap {
    fn from_iter<I: IntoIterator<Item = (StateId, StateId)>>(iter: I) -> Self {
        let mut m = StateMap::new();
        for (a, b) in iter {
            m.insert(a, b);
        }
        m
    }
}
