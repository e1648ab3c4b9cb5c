use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::LtsError;

/// Event label such as `go.5`, `at.5` or `is.next.inA?`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Result<Label, LtsError> {
        if Self::is_valid(name) {
            Ok(Label(Arc::from(name)))
        } else {
            Err(LtsError::InvalidLabel(name.to_string()))
        }
    }

    /// Panics on an invalid name. Meant for literals in code and tests.
    pub fn from_static(name: &str) -> Label {
        Label::new(name).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn is_valid(name: &str) -> bool {
        !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '?')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for Label {
    type Err = LtsError;

    fn from_str(s: &str) -> Result<Label, LtsError> {
        Label::new(s)
    }
}

impl Borrow<str> for Label {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Controlled/uncontrolled partition of the events of a problem.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    pub controlled: BTreeSet<Label>,
    pub uncontrolled: BTreeSet<Label>,
}

impl Alphabet {
    pub fn new(
        controlled: impl IntoIterator<Item = Label>,
        uncontrolled: impl IntoIterator<Item = Label>,
    ) -> Result<Alphabet, LtsError> {
        let controlled: BTreeSet<Label> = controlled.into_iter().collect();
        let uncontrolled: BTreeSet<Label> = uncontrolled.into_iter().collect();
        if let Some(l) = controlled.intersection(&uncontrolled).next() {
            return Err(LtsError::PartitionOverlap(l.clone()));
        }
        Ok(Alphabet { controlled, uncontrolled })
    }

    /// Everything in `all` that is not controlled becomes uncontrolled.
    pub fn from_controlled<'a>(
        all: impl IntoIterator<Item = &'a Label>,
        controlled: &BTreeSet<Label>,
    ) -> Alphabet {
        let uncontrolled = all
            .into_iter()
            .filter(|l| !controlled.contains(*l))
            .cloned()
            .collect();
        Alphabet { controlled: controlled.clone(), uncontrolled }
    }

    pub fn is_controlled(&self, l: &Label) -> bool {
        self.controlled.contains(l)
    }

    pub fn contains(&self, l: &Label) -> bool {
        self.controlled.contains(l) || self.uncontrolled.contains(l)
    }

    pub fn all(&self) -> BTreeSet<Label> {
        self.controlled.union(&self.uncontrolled).cloned().collect()
    }
}
