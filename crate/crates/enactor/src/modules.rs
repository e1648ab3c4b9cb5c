use std::collections::{BTreeMap, BTreeSet};

use skyweave_lts::Label;

use crate::EnactError;

/// A hybrid module as the enactor sees it: the commands it accepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDecl {
    pub id: String,
    pub commands: BTreeSet<Label>,
}

impl ModuleDecl {
    pub fn new<'a>(id: &str, commands: impl IntoIterator<Item = &'a str>) -> ModuleDecl {
        ModuleDecl { id: id.to_string(), commands: commands.into_iter().map(Label::from_static).collect() }
    }
}

/// One entry of a reconfiguration manifest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleChange {
    pub bind: Option<String>,
    pub unbind: Option<String>,
}

/// Uploaded and bound modules.
#[derive(Clone, Debug, Default)]
pub struct Modules {
    uploaded: BTreeMap<String, ModuleDecl>,
    bound: BTreeSet<String>,
}

impl Modules {
    pub fn upload(&mut self, m: ModuleDecl) {
        self.uploaded.insert(m.id.clone(), m);
    }

    pub fn is_empty(&self) -> bool {
        self.uploaded.is_empty()
    }

    pub fn bound(&self) -> &BTreeSet<String> {
        &self.bound
    }

    pub fn is_bound(&self, id: &str) -> bool {
        self.bound.contains(id)
    }

    pub fn bind(&mut self, id: &str) -> Result<(), EnactError> {
        self.apply(&[ModuleChange { bind: Some(id.to_string()), unbind: None }])
    }

    /// The bound module accepting `cmd`.
    pub fn handler(&self, cmd: &Label) -> Option<&str> {
        self.bound.iter().find(|id| self.uploaded[*id].commands.contains(cmd)).map(String::as_str)
    }

    /// Applies a whole manifest or nothing.
    pub fn apply(&mut self, manifest: &[ModuleChange]) -> Result<(), EnactError> {
        let mut next = self.bound.clone();
        for c in manifest {
            if let Some(u) = &c.unbind {
                next.remove(u);
            }
        }
        for c in manifest {
            if let Some(b) = &c.bind {
                if !self.uploaded.contains_key(b) {
                    return Err(EnactError::UnknownModule(b.clone()));
                }
                next.insert(b.clone());
            }
        }
        let mut seen: BTreeSet<&Label> = BTreeSet::new();
        for id in &next {
            for cmd in &self.uploaded[id].commands {
                if !seen.insert(cmd) {
                    return Err(EnactError::AmbiguousHandler(cmd.clone()));
                }
            }
        }
        self.bound = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> Modules {
        let mut m = Modules::default();
        m.upload(ModuleDecl::new("flight", ["go.1", "go.2"]));
        m.upload(ModuleDecl::new("p4", ["grab.4", "release.4"]));
        m.upload(ModuleDecl::new("clash", ["go.1"]));
        m
    }

    #[test]
    fn manifest_swaps_modules() {
        let mut m = registry();
        m.bind("flight").unwrap();
        let g4 = Label::from_static("grab.4");
        assert_eq!(m.handler(&g4), None);
        m.apply(&[ModuleChange { bind: Some("p4".into()), unbind: None }]).unwrap();
        assert_eq!(m.handler(&g4), Some("p4"));
        m.apply(&[ModuleChange { bind: None, unbind: Some("p4".into()) }]).unwrap();
        assert_eq!(m.handler(&g4), None);
    }

    #[test]
    fn failed_manifest_changes_nothing() {
        let mut m = registry();
        m.bind("flight").unwrap();
        let before = m.bound().clone();
        let bad = [ModuleChange { bind: Some("p4".into()), unbind: None }, ModuleChange { bind: Some("ghost".into()), unbind: None }];
        assert_eq!(m.apply(&bad), Err(EnactError::UnknownModule("ghost".into())));
        assert_eq!(m.bound(), &before);
        assert!(matches!(m.bind("clash"), Err(EnactError::AmbiguousHandler(_))));
        assert_eq!(m.bound(), &before);
    }

    #[test]
    fn empty_manifest_is_a_no_op() {
        let mut m = registry();
        m.bind("flight").unwrap();
        let before = m.bound().clone();
        m.apply(&[]).unwrap();
        assert_eq!(m.bound(), &before);
    }
}
