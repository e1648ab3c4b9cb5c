use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::{Label, Lts, LtsError, StateId, StateMap};

/// Parallel composition of two LTS. Shared labels synchronise, the rest
/// interleave. Only the part reachable from `(a.initial, b.initial)` is built.
///
/// Provenance of a result state is the concatenation of the operands'
/// provenance (or the bare state id when an operand has none), so nested
/// compositions yield flat tuples.
pub fn compose(a: &Lts, b: &Lts) -> Lts {
    let product = compose_all(&[a, b]);
    let flat = (0..product.num_states() as StateId)
        .map(|s| {
            let p = product.provenance(s).expect("product provenance");
            let mut v = Vec::new();
            for (part, &local) in [a, b].iter().zip(p) {
                match part.provenance(local) {
                    Some(inner) => v.extend_from_slice(inner),
                    None => v.push(local),
                }
            }
            v
        })
        .collect();
    product.with_provenance(flat)
}

/// N-ary composition from the joint initial state. Provenance is the tuple of
/// component states.
pub fn compose_all(parts: &[&Lts]) -> Lts {
    let root: Vec<StateId> = parts.iter().map(|p| p.initial()).collect();
    compose_all_from(parts, &[root])
}

/// N-ary composition exploring from several root tuples. The first root is
/// the initial state of the result.
pub fn compose_all_from(parts: &[&Lts], roots: &[Vec<StateId>]) -> Lts {
    assert!(!roots.is_empty(), "at least one root");
    let alphabet: Vec<Label> = parts
        .iter()
        .flat_map(|p| p.alphabet().iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // local[p][u] = index of union label u in part p, if any
    let local: Vec<Vec<Option<u32>>> = parts
        .iter()
        .map(|p| alphabet.iter().map(|l| p.label_index(l.as_str())).collect())
        .collect();
    let to_union: Vec<Vec<u32>> = parts
        .iter()
        .map(|p| p.alphabet().iter().map(|l| alphabet.binary_search(l).unwrap() as u32).collect())
        .collect();
    let participants: Vec<Vec<usize>> = (0..alphabet.len())
        .map(|u| (0..parts.len()).filter(|&p| local[p][u].is_some()).collect())
        .collect();

    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut tuples: Vec<Vec<StateId>> = Vec::new();
    let mut adj: Vec<Vec<(u32, StateId)>> = Vec::new();
    let mut queue = VecDeque::new();
    let intern = |t: Vec<StateId>,
                  index: &mut HashMap<Vec<StateId>, StateId>,
                  tuples: &mut Vec<Vec<StateId>>,
                  adj: &mut Vec<Vec<(u32, StateId)>>,
                  queue: &mut VecDeque<StateId>|
     -> StateId {
        if let Some(&id) = index.get(&t) {
            return id;
        }
        let id = tuples.len() as StateId;
        index.insert(t.clone(), id);
        tuples.push(t);
        adj.push(Vec::new());
        queue.push_back(id);
        id
    };
    for r in roots {
        assert_eq!(r.len(), parts.len(), "root arity");
        intern(r.clone(), &mut index, &mut tuples, &mut adj, &mut queue);
    }

    let mut candidates: Vec<u32> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let cur = tuples[id as usize].clone();
        candidates.clear();
        for (p, part) in parts.iter().enumerate() {
            for &(li, _) in part.out(cur[p]) {
                candidates.push(to_union[p][li as usize]);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for &u in &candidates {
            // successor choices for each participant
            let mut choices: Vec<(usize, Vec<StateId>)> = Vec::new();
            let mut blocked = false;
            for &p in &participants[u as usize] {
                let li = local[p][u as usize].unwrap();
                let succ: Vec<StateId> =
                    parts[p].out(cur[p]).iter().filter(|&&(l, _)| l == li).map(|&(_, t)| t).collect();
                if succ.is_empty() {
                    blocked = true;
                    break;
                }
                choices.push((p, succ));
            }
            if blocked {
                continue;
            }
            let mut combos: Vec<Vec<StateId>> = vec![cur.clone()];
            for (p, succ) in &choices {
                let mut next = Vec::with_capacity(combos.len() * succ.len());
                for c in &combos {
                    for &t in succ {
                        let mut c2 = c.clone();
                        c2[*p] = t;
                        next.push(c2);
                    }
                }
                combos = next;
            }
            for c in combos {
                let t = intern(c, &mut index, &mut tuples, &mut adj, &mut queue);
                adj[id as usize].push((u, t));
            }
        }
    }

    let names = if parts.iter().all(|p| p.has_names()) {
        tuples
            .iter()
            .map(|t| {
                let inner: Vec<&str> =
                    t.iter().zip(parts).map(|(&s, p)| p.state_name(s).unwrap()).collect();
                format!("({})", inner.join(","))
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut out = Lts::from_adjacency(alphabet, 0, adj).with_provenance(tuples);
    if !names.is_empty() {
        out = out.with_names(names);
    }
    out
}

/// `e` interrupted by `label` into `e2`: the disjoint union of both, plus a
/// `label` transition from every state `s` of `e` to each of `map(s)`.
///
/// States of `e` keep their ids; states of `e2` are shifted by
/// `e.num_states()`. Provenance is `[0, s]` for the first part and `[1, s]`
/// for the second.
pub fn interrupt(e: &Lts, e2: &Lts, label: &Label, map: &StateMap) -> Result<Lts, LtsError> {
    for s in 0..e.num_states() as StateId {
        match map.get(s) {
            Some(t) if !t.is_empty() => {}
            _ => return Err(LtsError::PartialMap(s)),
        }
    }
    interrupt_partial(e, e2, label, map)
}

/// Like [`interrupt`], but `label` is only enabled at states in the domain of
/// `map`. Used for reconfiguration maps, which need not be total.
pub fn interrupt_partial(e: &Lts, e2: &Lts, label: &Label, map: &StateMap) -> Result<Lts, LtsError> {
    if e.has_label(label.as_str()) || e2.has_label(label.as_str()) {
        return Err(LtsError::LabelClash(label.clone()));
    }
    let n1 = e.num_states() as StateId;
    for (s, targets) in map.iter() {
        if s >= n1 {
            return Err(LtsError::UnknownState(s));
        }
        if let Some(&t) = targets.iter().find(|&&t| t as usize >= e2.num_states()) {
            return Err(LtsError::UnknownState(t));
        }
    }
    let alphabet: Vec<Label> = e
        .alphabet()
        .iter()
        .chain(e2.alphabet())
        .chain(std::iter::once(label))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx = |l: &Label| alphabet.binary_search(l).unwrap() as u32;
    let li = idx(label);
    let mut adj: Vec<Vec<(u32, StateId)>> = Vec::with_capacity(e.num_states() + e2.num_states());
    for s in 0..n1 {
        let mut out: Vec<(u32, StateId)> = e.out(s).iter().map(|&(l, t)| (idx(e.label(l)), t)).collect();
        if let Some(targets) = map.get(s) {
            out.extend(targets.iter().map(|&t| (li, t + n1)));
        }
        adj.push(out);
    }
    for s in 0..e2.num_states() as StateId {
        adj.push(e2.out(s).iter().map(|&(l, t)| (idx(e2.label(l)), t + n1)).collect());
    }
    let provenance = (0..n1)
        .map(|s| vec![0, s])
        .chain((0..e2.num_states() as StateId).map(|s| vec![1, s]))
        .collect();
    let mut out = Lts::from_adjacency(alphabet, e.initial(), adj).with_provenance(provenance);
    if e.has_names() && e2.has_names() {
        let names = (0..n1)
            .map(|s| e.state_name(s).unwrap().to_string())
            .chain((0..e2.num_states() as StateId).map(|s| format!("{}'", e2.state_name(s).unwrap())))
            .collect();
        out = out.with_names(names);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Label {
        Label::from_static(s)
    }

    fn cycle2(x: &str, y: &str) -> Lts {
        Lts::from_parts([l(x), l(y)], 2, 0, [(0, l(x), 1), (1, l(y), 0)]).unwrap()
    }

    #[test]
    fn identity_unit() {
        let e = cycle2("a", "b");
        let i = Lts::unit([]);
        let c = compose(&e, &i);
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.num_transitions(), 2);
        assert_eq!(c.alphabet(), e.alphabet());
    }

    #[test]
    fn unit_with_alphabet_blocks() {
        let e = cycle2("a", "b");
        let stop = Lts::unit([l("a")]);
        let c = compose(&e, &stop);
        assert_eq!(c.num_states(), 1);
        assert_eq!(c.num_transitions(), 0);
    }

    #[test]
    fn interrupt_chain_to_initial() {
        let tr = [(0, l("a"), 1), (1, l("a"), 2)];
        let e = Lts::from_parts([l("a")], 3, 0, tr).unwrap();
        let e2 = cycle2("x", "y");
        let m = StateMap::constant(3, e2.initial());
        let r = interrupt(&e, &e2, &l("swap"), &m).unwrap();
        assert_eq!(r.num_transitions(), e.num_transitions() + e2.num_transitions() + 3);
        assert_eq!(r.num_states(), 5);
    }

    #[test]
    fn interrupt_errors() {
        let e = cycle2("a", "b");
        let mut partial = StateMap::new();
        partial.insert(0, 0);
        assert!(matches!(interrupt(&e, &e, &l("s"), &partial), Err(LtsError::PartialMap(1))));
        assert!(matches!(
            interrupt(&e, &e, &l("a"), &StateMap::identity(2)),
            Err(LtsError::LabelClash(_))
        ));
        // partial variant accepts the same map
        let r = interrupt_partial(&e, &e, &l("s"), &partial).unwrap();
        assert_eq!(r.step(1, "s").unwrap().len(), 0);
        assert_eq!(r.step(0, "s").unwrap().len(), 1);
    }

    #[test]
    fn set_valued_interrupt_is_nondeterministic() {
        let e = cycle2("a", "b");
        let e2 = Lts::from_parts([l("c")], 2, 0, [(0, l("c"), 1)]).unwrap();
        let m: StateMap = [(0, 0), (0, 1), (1, 1)].into_iter().collect();
        let r = interrupt(&e, &e2, &l("r"), &m).unwrap();
        assert_eq!(r.step(0, "r").unwrap(), BTreeSet::from([2, 3]));
        assert!(!r.is_deterministic());
    }
}
