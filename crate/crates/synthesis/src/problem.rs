use fixedbitset::FixedBitSet;
use skyweave_fltl::{BoolExpr, FluentDef, Gr1Liveness, Guard, SafetyFormula};
use skyweave_lang::Model;
use skyweave_lts::{Alphabet, Label, Lts};

use crate::SynthError;

/// A control problem `(E, phi, controlled events)`.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub name: String,
    pub env: Lts,
    /// Events of `env` outside `alphabet.controlled` are uncontrolled.
    pub alphabet: Alphabet,
    pub fluents: Vec<FluentDef>,
    pub safety: Vec<(SafetyFormula, Guard)>,
    pub liveness: Gr1Liveness,
    /// Environment states in which every move belongs to the environment.
    pub frozen: Option<FixedBitSet>,
}

impl ControlProblem {
    pub fn new(name: impl Into<String>, env: Lts, controlled: impl IntoIterator<Item = Label>) -> ControlProblem {
        let controlled = controlled.into_iter().collect();
        let alphabet = Alphabet::from_controlled(env.alphabet(), &controlled);
        ControlProblem {
            name: name.into(),
            env,
            alphabet,
            fluents: Vec::new(),
            safety: Vec::new(),
            liveness: Gr1Liveness::default(),
            frozen: None,
        }
    }

    /// The control problem `name` declared in a resolved document.
    pub fn from_model(model: &Model, name: &str) -> Result<ControlProblem, SynthError> {
        let decl = model.control_problem(name).ok_or_else(|| SynthError::UnknownProblem(name.to_string()))?;
        let env = model
            .processes
            .get(&decl.env)
            .ok_or_else(|| SynthError::UnknownProblem(decl.env.clone()))?
            .clone();
        let alphabet = Alphabet::from_controlled(env.alphabet(), &model.alphabet.controlled);
        let liveness = match &decl.liveness {
            Some(l) => model.liveness[l].clone(),
            None => Gr1Liveness::default(),
        };
        Ok(ControlProblem {
            name: decl.name.clone(),
            env,
            alphabet,
            fluents: model.fluents.clone(),
            safety: vec![(model.safety_of(&decl.safety), Guard::Always)],
            liveness,
            frozen: None,
        })
    }

    pub fn is_controlled(&self, l: &Label) -> bool {
        self.alphabet.is_controlled(l)
    }

    /// Guarantees, with `true` standing in for an empty list.
    pub fn guarantees(&self) -> Vec<BoolExpr> {
        if self.liveness.guarantees.is_empty() {
            vec![BoolExpr::Const(true)]
        } else {
            self.liveness.guarantees.clone()
        }
    }
}
