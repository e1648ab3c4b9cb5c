//! Random small arenas and a brute-force realizability oracle that
//! enumerates memoryless strategies.

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyweave_lts::Label;
use skyweave_synthesis::arena::ERROR;
use skyweave_synthesis::Arena;

pub fn random_arena(rng: &mut ChaCha8Rng, single_guarantee: bool, branching: bool) -> Arena {
    let n = rng.random_range(1..=6) + 1;
    let k = rng.random_range(1..=4);
    let labels: Vec<Label> = (0..k).map(|i| Label::new(&format!("e{i}")).unwrap()).collect();
    let controlled: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
    let mut succ = vec![Vec::new(); n];
    let mut frozen = FixedBitSet::with_capacity(n);
    for (s, out) in succ.iter_mut().enumerate().skip(1) {
        if rng.random_bool(0.1) {
            frozen.insert(s);
        }
        for l in 0..k as u32 {
            if rng.random_bool(0.45) {
                let fanout = if branching && rng.random_bool(0.15) { 2 } else { 1 };
                for _ in 0..fanout {
                    let t = if rng.random_bool(0.1) { ERROR } else { rng.random_range(1..n as u32) };
                    out.push((l, t));
                }
            }
        }
    }
    let subset = |rng: &mut ChaCha8Rng, p: f64| {
        let mut b = FixedBitSet::with_capacity(n);
        for s in 1..n {
            if rng.random_bool(p) {
                b.insert(s);
            }
        }
        b
    };
    let n_a = rng.random_range(0..=2);
    let assumptions = (0..n_a).map(|_| subset(rng, 0.6)).collect();
    let n_g = if single_guarantee { 1 } else { rng.random_range(1..=3) };
    let guarantees = (0..n_g).map(|_| subset(rng, 0.4)).collect();
    Arena::from_parts(labels, controlled, succ, frozen, 1, assumptions, guarantees)
}

#[derive(Clone, Copy, PartialEq)]
enum Opt {
    Act(u32),
    Wait,
    Stuck,
}

fn options(a: &Arena, s: u32) -> Vec<Opt> {
    let out = a.out(s);
    let mut v = Vec::new();
    if a.is_frozen(s) {
        if !out.is_empty() {
            v.push(Opt::Wait);
        }
    } else {
        let mut seen = Vec::new();
        for &(l, _) in out {
            if a.is_controlled(l) && !seen.contains(&l) {
                seen.push(l);
                v.push(Opt::Act(l));
            }
        }
        if out.iter().any(|&(l, _)| !a.is_controlled(l)) {
            v.push(Opt::Wait);
        }
    }
    if v.is_empty() {
        v.push(Opt::Stuck);
    }
    v
}

fn successors(a: &Arena, s: u32, o: Opt) -> u64 {
    let mut m = 0u64;
    for &(l, t) in a.out(s) {
        if a.is_frozen(s) || !a.is_controlled(l) || o == Opt::Act(l) {
            m |= 1 << t;
        }
    }
    m
}

/// Reachability closure over a graph of at most 64 nodes given as bitmasks.
fn closure(edges: &[u64]) -> Vec<u64> {
    let n = edges.len();
    let mut r = edges.to_vec();
    for k in 0..n {
        for i in 0..n {
            if r[i] >> k & 1 == 1 {
                r[i] |= r[k];
            }
        }
    }
    r
}

/// Some cycle inside `nodes` meets every set in `meet`.
fn fair_cycle(edges: &[u64], nodes: u64, meet: &[u64]) -> bool {
    let restricted: Vec<u64> = edges.iter().enumerate().map(|(i, &e)| if nodes >> i & 1 == 1 { e & nodes } else { 0 }).collect();
    let r = closure(&restricted);
    (0..edges.len()).any(|v| {
        if r[v] >> v & 1 == 0 {
            return false;
        }
        let scc: u64 = (0..edges.len()).filter(|&u| r[v] >> u & 1 == 1 && r[u] >> v & 1 == 1).fold(0, |m, u| m | 1 << u);
        meet.iter().all(|&a| a & scc != 0)
    })
}

fn mask(b: &FixedBitSet) -> u64 {
    b.ones().fold(0, |m, s| m | 1 << s)
}

pub fn brute_force(a: &Arena) -> bool {
    let n = a.num_states();
    let opts: Vec<Vec<Opt>> = (0..n as u32).map(|s| if s == ERROR { vec![Opt::Stuck] } else { options(a, s) }).collect();
    let assumptions: Vec<u64> = (0..a.assumptions.len()).map(|i| mask(&a.assumptions[i])).collect();
    let g = mask(&a.guarantees[0]);
    let mut pick = vec![0usize; n];
    loop {
        let sigma: Vec<Opt> = (0..n).map(|s| opts[s][pick[s]]).collect();
        let edges: Vec<u64> = (0..n as u32).map(|s| if sigma[s as usize] == Opt::Stuck { 0 } else { successors(a, s, sigma[s as usize]) }).collect();
        let reach = closure(&edges)[a.initial() as usize] | 1 << a.initial();
        let stuck = (0..n).any(|s| reach >> s & 1 == 1 && sigma[s] == Opt::Stuck);
        if !stuck && !fair_cycle(&edges, reach & !g, &assumptions) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            pick[i] += 1;
            if pick[i] < opts[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Solver and oracle verdicts on `cases` single-guarantee arenas, and how
/// many of them were realizable.
pub fn agreement(seed: u64, cases: usize) -> (usize, usize, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut agree, mut realizable, mut bad) = (0, 0, Vec::new());
    for case in 0..cases {
        let a = random_arena(&mut rng, true, true);
        let fix = skyweave_synthesis::solve(&a).is_winning(a.initial());
        if fix == brute_force(&a) {
            agree += 1;
        } else {
            bad.push(case);
        }
        realizable += fix as usize;
    }
    (agree, realizable, bad)
}
