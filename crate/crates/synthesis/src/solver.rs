//! The GR(1) fixpoint
//! `nu Z. /\_j mu Y. \/_i nu X. (G_j & cpre(Z)) | cpre(Y) | (!A_i & cpre(X))`,
//! computed inside the current `Z`, with rank bookkeeping for strategy
//! extraction.

use fixedbitset::FixedBitSet;

use crate::arena::{full, Arena, ERROR};

/// Rank key `(r, i)` packed as `r * num_assumptions + i`; `UNRANKED` outside Z.
pub const UNRANKED: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Solution {
    pub winning: FixedBitSet,
    /// `keys[j][s]`: first `(r, i)` at which `s` entered `X_{r,i}` for guarantee `j`.
    pub keys: Vec<Vec<u32>>,
    pub num_assumptions: u32,
    pub outer_iterations: usize,
    pub cpre_calls: usize,
}

impl Solution {
    pub fn is_winning(&self, s: u32) -> bool {
        self.winning.contains(s as usize)
    }

    pub fn rank(&self, j: usize, s: u32) -> u32 {
        match self.keys[j][s as usize] {
            UNRANKED => UNRANKED,
            k => k / self.num_assumptions,
        }
    }
}

pub fn solve(arena: &Arena) -> Solution {
    let n = arena.num_states();
    let m = arena.num_assumptions();
    let mut z = full(n);
    z.set(ERROR as usize, false);
    let mut outer = 0;
    let mut calls = 0;
    loop {
        outer += 1;
        let mut keys = Vec::with_capacity(arena.guarantees.len());
        let mut next = z.clone();
        for g in &arena.guarantees {
            let (y, k) = reach_layers(arena, &z, g, m, &mut calls);
            next.intersect_with(&y);
            keys.push(k);
        }
        if next == z {
            return Solution { winning: z, keys, num_assumptions: m as u32, outer_iterations: outer, cpre_calls: calls };
        }
        z = next;
    }
}

/// `mu Y` for one guarantee, recording the key of every state reached.
fn reach_layers(arena: &Arena, z: &FixedBitSet, g: &FixedBitSet, m: usize, calls: &mut usize) -> (FixedBitSet, Vec<u32>) {
    let n = arena.num_states();
    let mut keys = vec![UNRANKED; n];
    let mut goal = arena.cpre(z, z);
    goal.intersect_with(g);
    *calls += 1;
    let mut y = FixedBitSet::with_capacity(n);
    let mut r = 0u32;
    loop {
        let mut base = arena.cpre(&y, z);
        *calls += 1;
        base.union_with(&goal);
        let mut y_next = y.clone();
        for i in 0..m {
            let x = stay(arena, z, &base, i, calls);
            for s in x.ones() {
                if keys[s] == UNRANKED {
                    keys[s] = r * m as u32 + i as u32;
                }
            }
            y_next.union_with(&x);
        }
        debug_assert!(y.is_subset(&y_next), "Y must grow monotonically");
        if y_next == y {
            return (y, keys);
        }
        y = y_next;
        r += 1;
    }
}

/// `nu X. base | (!A_i & cpre(X))` inside `z`.
fn stay(arena: &Arena, z: &FixedBitSet, base: &FixedBitSet, i: usize, calls: &mut usize) -> FixedBitSet {
    let mut cand = z.clone();
    cand.difference_with(base);
    if arena.assumptions.get(i).is_none() {
        // !true is empty
        return base.clone();
    }
    cand.difference_with(&arena.assumptions[i]);
    let mut x = z.clone();
    loop {
        *calls += 1;
        let mut next = base.clone();
        for s in cand.ones() {
            if x.contains(s) && arena.cpre_at(s as u32, &x) {
                next.insert(s);
            }
        }
        if next == x {
            return x;
        }
        x = next;
    }
}
