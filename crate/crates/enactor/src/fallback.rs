use skyweave_lts::{Label, Lts, StateId};

use crate::Enactable;

/// The preset controller engaged on unexpected events. Reaching a state in
/// `landed` ends the run.
#[derive(Clone, Debug)]
pub struct FallbackPlan {
    pub controller: Enactable,
    pub landed: Vec<bool>,
}

impl FallbackPlan {
    /// Fly back to `home`, then land.
    pub fn return_and_land(home: u32) -> FallbackPlan {
        let go = Label::new(&format!("go.{home}")).expect("label");
        let at = Label::new(&format!("at.{home}")).expect("label");
        let steps = [(go.clone(), true), (at, false), (Label::from_static("land"), true), (Label::from_static("land.end"), false)];
        Self::sequence(&steps)
    }

    /// Land where the vehicle is.
    pub fn land_in_place() -> FallbackPlan {
        Self::sequence(&[(Label::from_static("land"), true), (Label::from_static("land.end"), false)])
    }

    /// A straight line of steps; commands are marked `true`.
    fn sequence(steps: &[(Label, bool)]) -> FallbackPlan {
        let n = steps.len() + 1;
        let tr = steps.iter().enumerate().map(|(i, (l, _))| (i as StateId, l.clone(), i as StateId + 1));
        let lts = Lts::from_parts(steps.iter().map(|s| s.0.clone()), n, 0, tr).expect("fallback plan");
        let mut choice: Vec<Option<Label>> = steps.iter().map(|(l, cmd)| cmd.then(|| l.clone())).collect();
        choice.push(None);
        let mut landed = vec![false; n];
        landed[n - 1] = true;
        FallbackPlan { controller: Enactable { lts, choice }, landed }
    }

    pub fn is_landed(&self, s: StateId) -> bool {
        self.landed[s as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_steers_home_then_lands() {
        let p = FallbackPlan::return_and_land(3);
        let c = &p.controller;
        assert_eq!(c.selection(0).unwrap().as_str(), "go.3");
        let s = c.next(0, &Label::from_static("go.3")).unwrap();
        assert_eq!(c.selection(s), None);
        let s = c.next(s, &Label::from_static("at.3")).unwrap();
        assert_eq!(c.selection(s).unwrap().as_str(), "land");
        let s = c.next(s, &Label::from_static("land")).unwrap();
        let s = c.next(s, &Label::from_static("land.end")).unwrap();
        assert!(p.is_landed(s));
    }
}
