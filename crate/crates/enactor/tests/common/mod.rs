#![allow(dead_code)]

pub mod schedule;

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use skyweave_dcu::{solve_update, UpdateProblem, UpdateSolution};
use skyweave_lang::{load, Context, Model};
use skyweave_lts::{Label, Lts, StateId};
use skyweave_synthesis::{synthesize, ControlProblem, Controller};

pub fn model(file: &str) -> Model {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(file);
    load(&std::fs::read_to_string(p).unwrap(), &Context::default()).unwrap().1
}

pub struct Fixture {
    pub old: ControlProblem,
    pub c: Controller,
    pub sol: UpdateSolution,
}

pub fn fixture(file: &str, update: &str) -> Fixture {
    let m = model(file);
    let up = UpdateProblem::from_model(&m, update).unwrap();
    let old = ControlProblem::from_model(&m, &m.update_problem(update).unwrap().old).unwrap();
    let c = synthesize(&old).unwrap().controller.unwrap();
    let sol = solve_update(&up, &c.lts).unwrap();
    Fixture { old, c, sol }
}

/// Plays the environment side of `E_u`: follows commands and, when it owns
/// the next move, releases one of its events at random.
pub struct EnvSim<'a> {
    pub lts: &'a Lts,
    pub state: StateId,
    pub controlled: Box<dyn Fn(&Label) -> bool + 'a>,
}

impl<'a> EnvSim<'a> {
    pub fn follow(&mut self, ev: &Label) {
        let li = self.lts.label_index(ev.as_str()).unwrap_or_else(|| panic!("{ev} outside the environment"));
        self.state = self.lts.out(self.state).iter().find(|x| x.0 == li).unwrap_or_else(|| panic!("{ev} refused at {}", self.state)).1;
    }

    pub fn own_moves(&self) -> Vec<Label> {
        let mut v: Vec<Label> = self
            .lts
            .out(self.state)
            .iter()
            .map(|&(l, _)| self.lts.label(l).clone())
            .filter(|l| !(self.controlled)(l) && l.as_str() != "hotSwap")
            .collect();
        v.dedup();
        v
    }

    pub fn pick(&mut self, rng: &mut ChaCha8Rng) -> Option<Label> {
        let v = self.own_moves();
        if v.is_empty() {
            return None;
        }
        let l = v[rng.random_range(0..v.len())].clone();
        self.follow(&l);
        Some(l)
    }
}
