use skyweave_dcu::UpdateSolution;
use skyweave_lts::{Label, Lts, StateId};
use skyweave_synthesis::Controller;

/// A controller ready to run: its LTS and the command it issues in each
/// state, if any.
#[derive(Clone, Debug)]
pub struct Enactable {
    pub lts: Lts,
    pub choice: Vec<Option<Label>>,
}

impl Enactable {
    pub fn from_controller(c: &Controller) -> Enactable {
        Enactable { lts: c.lts.clone(), choice: c.choice.clone() }
    }

    /// The replacement controller of an update.
    pub fn from_update(sol: &UpdateSolution) -> Enactable {
        Enactable { lts: sol.new_lts.clone(), choice: sol.new_controller.choice.clone() }
    }

    /// Derives the choices of a bare LTS, e.g. one read back from a table:
    /// the first enabled controlled event, in alphabet order.
    pub fn from_lts(lts: Lts, controlled: impl Fn(&Label) -> bool) -> Enactable {
        let choice = (0..lts.num_states() as StateId)
            .map(|s| {
                let mut enabled: Vec<&Label> = lts.out(s).iter().map(|&(l, _)| lts.label(l)).filter(|l| controlled(l)).collect();
                enabled.sort();
                enabled.first().map(|l| (*l).clone())
            })
            .collect();
        Enactable { lts, choice }
    }

    pub fn initial(&self) -> StateId {
        self.lts.initial()
    }

    /// Successor on `ev`, taking the first target if several exist.
    pub fn next(&self, s: StateId, ev: &Label) -> Option<StateId> {
        let li = self.lts.label_index(ev.as_str())?;
        self.lts.out(s).iter().find(|&&(l, _)| l == li).map(|&(_, t)| t)
    }

    pub fn selection(&self, s: StateId) -> Option<&Label> {
        self.choice.get(s as usize).and_then(Option::as_ref)
    }
}
